#pragma once

#include "handik/dense.hpp"
#include "handik/handmodel.hpp"
#include "handik/losses.hpp"
#include "handik/mesh_joints.hpp"
#include "handik/sikdata.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace handik {

inline constexpr int kSikInputDim = 2 * kNumJoints * 3;
inline constexpr int kSikQuatDim = 4 * kNumArticulated;
inline constexpr int kSikWeightLayers = 7;
inline constexpr int kSikDefaultWidth = 256;

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SikOutput {
    RawQuats quats{};
    HandShape shape;
};

/// Two independent seven-layer regressors over the same flattened [xbar, kbar]
/// input: theta_reg emits 16 raw quaternions, beta_reg the shape vector.
struct SikNet {
    DenseNet theta_reg;
    DenseNet beta_reg;

    /// Kaiming-initialized heads; the rotation head's output bias starts at
    /// identity quaternions so the first forward pass is normalizable.
    static SikNet create(std::uint64_t seed, int width = kSikDefaultWidth);
    /// Architecture only, all parameters zero.
    static SikNet zeros(int width = kSikDefaultWidth);

    int width() const { return theta_reg.dims()[1]; }
    SikOutput forward(const NormalizedPose& input) const;
    /// Batched forward: one column per input.
    void forward_batch(const Eigen::MatrixXd& inputs, Eigen::MatrixXd& quats, Eigen::MatrixXd& betas,
                       DenseNet::Cache* theta_cache = nullptr, DenseNet::Cache* beta_cache = nullptr) const;

    bool operator==(const SikNet& o) const { return theta_reg == o.theta_reg && beta_reg == o.beta_reg; }
};

/// Flattened [xbar; kbar], joint-major xyz. Throws on non-finite input.
Eigen::VectorXd sik_input(const NormalizedPose& p);
Pose normalize_quats(const RawQuats& q);

enum class TrainMode { Full, Finetune };
std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct ObjectiveConfig {
    LossWeights weights;
    TrainMode mode = TrainMode::Full;
    /// Optional L2 pull of the shape head toward beta_star, full mode only.
    bool direct_beta = true;
    double direct_beta_weight = 0.1;
};

struct BatchTerms {
    double total = 0.0;
    double quaternion = 0.0;
    double shape = 0.0;
    double joint = 0.0;
    double direct_beta = 0.0;
    /// Mean over samples and joints of |xhat_pred - xbar|.
    double joint_error = 0.0;

    nlohmann::json to_json() const;
};

struct BatchResult {
    BatchTerms mean;
    ParamVector grad_theta;
    ParamVector grad_beta;
    /// Per-sample RMS joint error in normalized units.
    std::vector<double> joint_rms;
};

/// Mean objective over the batch and, if requested, its exact gradient with
/// respect to both heads' parameters. `inputs[i]` feeds the net; `targets[i]`
/// supplies supervision. Finetune mode never touches q_star.
BatchResult evaluate_batch(const SikNet& net, const MeshJointLayer& layer, const HandModel& model,
                           const std::vector<NormalizedPose>& inputs, const std::vector<const SikSample*>& targets,
                           const ObjectiveConfig& obj, bool want_grad);

struct TrainConfig {
    int epochs = 100;
    int batch_size = 512;
    double lr = 1e-4;
    int lr_drop_epoch = 50;
    double lr_after_drop = 1e-5;
    ObjectiveConfig objective;
    /// Std of the Gaussian added to xbar before re-normalization, finetune mode.
    double noise_sigma = 0.02;
    std::uint64_t seed = 1;
    /// Where a diagnostic JSON dump goes when a batch produces a non-finite loss.
    std::string diagnostic_path;

    void validate() const;
    nlohmann::json to_json() const;
    /// Missing keys keep their values from `base`.
    static TrainConfig from_json(const nlohmann::json& j, const TrainConfig& base);
    static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    BatchTerms train;
    BatchTerms test;

    nlohmann::json to_json() const;
};

struct TrainResult {
    /// Parameters at the epoch with the lowest held-out joint error (the
    /// initial net when epochs == 0 or there is no test split).
    SikNet best;
    SikNet last;
    int best_epoch = 0;
    std::vector<EpochLog> log;
};

/// Finetune inputs: xbar plus isotropic noise, re-normalized. Deterministic in
/// (seed, key).
NormalizedPose noisy_input(const SikSample& s, double sigma, std::uint64_t seed, std::string_view stream,
                           std::uint64_t key);

TrainResult train(const SikNet& init, const HandModel& model, const std::vector<SikSample>& data,
                  const DatasetSplit& split, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

struct MeshPrediction {
    HandMesh mesh;
    Pose pose;
    HandShape shape;
};
/// normalize -> forward -> unit quaternions -> shaped template -> skin.
MeshPrediction predict_mesh(const SikNet& net, const JointSet& joints, const HandModel& model);

/// Normalized joints the net's prediction reproduces through the model.
std::array<Vec3, kNumJoints> predict_normalized_joints(const SikNet& net, const NormalizedPose& input,
                                                       const MeshJointLayer& layer);

inline constexpr std::uint32_t kSknVersion = 1;
std::vector<char> checkpoint_bytes(const SikNet& net, const HandModel& model);
/// Throws binio::FormatError on malformed data and ModelError when the
/// checkpoint was trained against a different hand model.
SikNet parse_checkpoint(const std::vector<char>& bytes, const HandModel& model);
void save_checkpoint(const SikNet& net, const HandModel& model, const std::string& path);
SikNet load_checkpoint(const std::string& path, const HandModel& model);

}  // namespace handik
