#pragma once

#include "handik/handmodel.hpp"
#include "handik/kinematics.hpp"
#include "handik/sikdata.hpp"
#include "handik/siknet.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace handik {

enum class FitInit { Seeded, Identity };

struct FitConfig {
    int max_iters = 200;
    double damping = 1e-3;
    /// Joint RMS, normalized units, below which a fit counts as converged.
    double tol = 1e-4;
    double beta_weight = 1e-6;
    double jacobian_step = 1e-6;
    FitInit init = FitInit::Seeded;

    void validate() const;
    nlohmann::json to_json() const;
};

struct FitStart {
    Pose pose = identity_pose();
    HandShape shape;
};

struct FitResult {
    Pose quats = identity_pose();
    HandShape beta;
    double residual_rms = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Objective after the start and after every accepted step.
    std::vector<double> cost_history;

    nlohmann::json to_json() const;
};

/// Normalized joints of the model at (pose, shape).
std::array<Vec3, kNumJoints> model_normalized_joints(const Pose& pose, const HandShape& shape, const HandModel& model);

/// Closed-form starting point: Kabsch alignment of the palm for the root,
/// then per-joint minimal rotations pointing each bone at its target.
FitStart seed_start(const NormalizedPose& target, const HandModel& model);

/// Levenberg-Marquardt over per-joint rotation tangents and shape, in
/// normalized joint space. Non-convergence is reported, not thrown.
FitResult fit(const JointSet& target, const HandModel& model, const FitConfig& cfg,
              const std::optional<FitStart>& start = std::nullopt);

struct CompareReport {
    std::vector<double> net_rms;
    std::vector<double> oracle_rms;
    double net_median = 0.0;
    double oracle_median = 0.0;
    double net_p90 = 0.0;
    double oracle_p90 = 0.0;
    /// net_median / oracle_median; 1 when both are zero.
    double median_ratio = 0.0;
    double max_ratio = 3.0;
    bool pass = false;

    nlohmann::json to_json() const;
};

CompareReport compare_rms(std::vector<double> net_rms, std::vector<double> oracle_rms, double max_ratio = 3.0);
CompareReport compare_to_net(const SikNet& net, const std::vector<SikSample>& samples,
                             const std::vector<std::size_t>& indices, const HandModel& model, const FitConfig& cfg,
                             double max_ratio = 3.0);

double percentile(std::vector<double> values, double q);

}  // namespace handik
