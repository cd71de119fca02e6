#pragma once

#include "handik/handmodel.hpp"
#include "handik/heatmaps.hpp"
#include "handik/kinematics.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <string>
#include <vector>

namespace handik {

/// Multi-task weights {H, S, J, D, Q, beta}; defaults {100, 1, 1000, 1, 1, 1}.
struct LossWeights {
    double heatmap = 100.0;
    double silhouette = 1.0;
    double joint = 1000.0;
    double depth = 1.0;
    double quaternion = 1.0;
    double shape = 1.0;

    void validate() const;
};

struct LossReport {
    std::map<std::string, double> terms;
    std::map<std::string, double> weights;
    double total = 0.0;

    nlohmann::json to_json() const;
    std::string to_json_line() const;
};

class LossError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class Grad>
struct LossValue {
    double value = 0.0;
    Grad grad{};
};

/// Pixel-wise mean squared error over K*H*W.
LossValue<HeatMap2D> heatmap_mse(const HeatMap2D& pred, const HeatMap2D& gt);

inline constexpr double kProbabilityClamp = 1e-7;
/// Mean binary cross-entropy; pred is clamped to [eps, 1 - eps].
LossValue<Silhouette> silhouette_ce(const Silhouette& pred, const Silhouette& gt);

/// Sum over joints of squared Euclidean distance.
LossValue<std::array<Vec3, kNumJoints>> joint_mse(const std::array<Vec3, kNumJoints>& pred,
                                                  const std::array<Vec3, kNumJoints>& gt);
LossValue<std::array<Vec3, kNumJoints>> joint_mse(const JointSet& pred, const JointSet& gt);

/// joint_mse(normalize_joints(pred).xbar, target_xbar), gradient w.r.t. the
/// unnormalized pred.
LossValue<std::array<Vec3, kNumJoints>> normalized_joint_mse(const std::array<Vec3, kNumJoints>& pred,
                                                             const std::array<Vec3, kNumJoints>& target_xbar);

struct DepthLoss {
    double value = 0.0;
    DepthMap grad;
    bool empty_mask = false;
};
/// Smooth-L1 averaged over pixels with mask > 0.5.
DepthLoss depth_smooth_l1(const DepthMap& pred, const DepthMap& gt, const Silhouette& mask);

using RawQuats = std::array<Eigen::Vector4d, kNumArticulated>;

struct QuatLoss {
    double cos_term = 0.0;
    double l2_term = 0.0;
    double norm_term = 0.0;
    /// Gradient of cos_term + l2_term + norm_term w.r.t. the raw predictions.
    RawQuats grad{};

    double combined() const { return cos_term + l2_term + norm_term; }
};
/// Double-cover aware: both terms use the sign of <pred_hat, gt> that
/// minimizes the error.
QuatLoss quaternion_loss(const RawQuats& pred, const Pose& gt);

/// sum_b (Lbar_b(Q, beta) - Lbar*_b)^2 + ||beta||^2 on scale-invariant bone
/// lengths, with gradient w.r.t. beta.
LossValue<std::array<double, kNumShape>> shape_loss(const Pose& quats, const HandShape& beta,
                                                    const BoneLengths& gt_lengths, const HandModel& model);

LossReport total_seed_loss(double heatmap, double silhouette, const LossWeights& w);
LossReport total_lift_loss(double joint, double depth, const LossWeights& w);
LossReport total_ik_loss(double quaternion, double shape, double joint, const LossWeights& w);

}  // namespace handik
