#include "handik/losses.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace handik {

void LossWeights::validate() const {
    for (double w : {heatmap, silhouette, joint, depth, quaternion, shape}) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw LossError("loss weights must be finite and non-negative");
    }
}

nlohmann::json LossReport::to_json() const {
    nlohmann::json j;
    j["terms"] = terms;
    j["weights"] = weights;
    j["total"] = total;
    return j;
}

std::string LossReport::to_json_line() const { return to_json().dump(); }

LossValue<HeatMap2D> heatmap_mse(const HeatMap2D& pred, const HeatMap2D& gt) {
    if (pred.joints != gt.joints || pred.height != gt.height || pred.width != gt.width) {
        throw ShapeError("heatmap_mse: shape mismatch");
    }
    LossValue<HeatMap2D> out{0.0, HeatMap2D(pred.joints, pred.height, pred.width)};
    const double n = static_cast<double>(pred.data.size());
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double d = pred.data[i] - gt.data[i];
        out.value += d * d;
        out.grad.data[i] = 2.0 * d / n;
    }
    out.value /= n;
    return out;
}

LossValue<Silhouette> silhouette_ce(const Silhouette& pred, const Silhouette& gt) {
    if (pred.height != gt.height || pred.width != gt.width) throw ShapeError("silhouette_ce: shape mismatch");
    LossValue<Silhouette> out{0.0, Silhouette(pred.height, pred.width)};
    const double n = static_cast<double>(pred.data.size());
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double raw = pred.data[i];
        const double p = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
        const double g = gt.data[i];
        out.value -= g * std::log(p) + (1.0 - g) * std::log(1.0 - p);
        const bool clamped = raw != p;
        out.grad.data[i] = clamped ? 0.0 : -(g / p - (1.0 - g) / (1.0 - p)) / n;
    }
    out.value /= n;
    return out;
}

LossValue<std::array<Vec3, kNumJoints>> joint_mse(const std::array<Vec3, kNumJoints>& pred,
                                                  const std::array<Vec3, kNumJoints>& gt) {
    LossValue<std::array<Vec3, kNumJoints>> out;
    for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 d = pred[j] - gt[j];
        out.value += d.squaredNorm();
        out.grad[j] = 2.0 * d;
    }
    return out;
}

LossValue<std::array<Vec3, kNumJoints>> joint_mse(const JointSet& pred, const JointSet& gt) {
    if (pred.units != gt.units) throw LossError("joint_mse: prediction and target use different units");
    return joint_mse(pred.positions, gt.positions);
}

LossValue<std::array<Vec3, kNumJoints>> normalized_joint_mse(const std::array<Vec3, kNumJoints>& pred,
                                                             const std::array<Vec3, kNumJoints>& target) {
    const Vec3 ref = pred[kReferenceJoint] - pred[kRootJoint];
    const double len = ref.norm();
    if (!(len > 1e-12)) throw LossError("normalized_joint_mse: degenerate reference bone");
    const Vec3 unit = ref / len;
    LossValue<std::array<Vec3, kNumJoints>> out;
    for (auto& g : out.grad) g.setZero();
    out.value = target[kRootJoint].squaredNorm();
    double g_len = 0.0;
    for (int j = 1; j < kNumJoints; ++j) {
        const Vec3 xhat = (pred[j] - pred[kRootJoint]) / len;
        const Vec3 d = xhat - target[j];
        out.value += d.squaredNorm();
        const Vec3 g = 2.0 * d;
        out.grad[j] += g / len;
        out.grad[kRootJoint] -= g / len;
        g_len -= g.dot(xhat) / len;
    }
    out.grad[kReferenceJoint] += g_len * unit;
    out.grad[kRootJoint] -= g_len * unit;
    return out;
}

DepthLoss depth_smooth_l1(const DepthMap& pred, const DepthMap& gt, const Silhouette& mask) {
    if (pred.height != gt.height || pred.width != gt.width || mask.height != pred.height || mask.width != pred.width) {
        throw ShapeError("depth_smooth_l1: shape mismatch");
    }
    DepthLoss out{0.0, DepthMap(pred.height, pred.width), false};
    std::size_t count = 0;
    for (double m : mask.data) count += m > 0.5;
    if (count == 0) {
        out.empty_mask = true;
        return out;
    }
    const double n = static_cast<double>(count);
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        if (!(mask.data[i] > 0.5)) continue;
        const double x = pred.data[i] - gt.data[i];
        const double ax = std::abs(x);
        out.value += ax < 1.0 ? 0.5 * x * x : ax - 0.5;
        out.grad.data[i] = (ax < 1.0 ? x : (x > 0.0 ? 1.0 : -1.0)) / n;
    }
    out.value /= n;
    return out;
}

QuatLoss quaternion_loss(const RawQuats& pred, const Pose& gt) {
    QuatLoss out;
    const double inv_count = 1.0 / kNumArticulated;
    for (int a = 0; a < kNumArticulated; ++a) {
        const Eigen::Vector4d& p = pred[a];
        const double n = p.norm();
        if (!(n > 1e-12) || !std::isfinite(n)) throw LossError("quaternion_loss: zero-norm prediction");
        const Eigen::Vector4d ph = p / n;
        const Eigen::Vector4d g = gt[a].coeffs();
        const double dot = ph.dot(g);
        const double s = dot >= 0.0 ? 1.0 : -1.0;
        out.cos_term += (1.0 - std::abs(dot)) * inv_count;
        const Eigen::Vector4d diff = ph - s * g;
        out.l2_term += diff.squaredNorm() * inv_count;
        out.norm_term += (n - 1.0) * (n - 1.0) * inv_count;

        const Eigen::Vector4d g_hat = (-s * g + 2.0 * diff) * inv_count;
        // through ph = p / |p|
        const Eigen::Vector4d g_dir = (g_hat - ph * ph.dot(g_hat)) / n;
        out.grad[a] = g_dir + 2.0 * (n - 1.0) * ph * inv_count;
    }
    return out;
}

LossValue<std::array<double, kNumShape>> shape_loss(const Pose& quats, const HandShape& beta,
                                                    const BoneLengths& gt_lengths, const HandModel& model) {
    // Joints of the shaped template: regressor applied to T + B(beta), via the
    // model's precomputed linear map.
    const auto rest = model.shaped_joints(beta);
    const Offsets off = offsets_from_joints(rest);
    Pose unit;
    for (int a = 0; a < kNumArticulated; ++a) unit[a] = quats[a].normalized();
    const FkResult fk = forward_kinematics(unit, off);
    const NormalizedPose norm = normalize_joints(fk.joints);
    const BoneLengths lengths = bone_lengths(norm.xbar);

    LossValue<std::array<double, kNumShape>> out;
    std::array<double, kNumBones> err{};
    for (int b = 0; b < kNumBones; ++b) {
        err[b] = lengths[b] - gt_lengths[b];
        out.value += err[b] * err[b];
    }
    for (int i = 0; i < kNumShape; ++i) out.value += beta.beta[i] * beta.beta[i];

    // Rotations preserve bone lengths, so Lbar_b = |o_b| / |o_ref| and the
    // gradient only runs through the shaped offsets.
    const auto& jb = model.joint_shape_basis();
    const int ref_bone = kReferenceJoint - 1;
    const double ref_len = off[kReferenceJoint].norm();
    if (!(ref_len > 1e-12)) throw LossError("shape_loss: degenerate reference bone");
    const Vec3 ref_unit = off[kReferenceJoint] / ref_len;
    for (int i = 0; i < kNumShape; ++i) {
        const Vec3 d_ref = jb[kReferenceJoint][i] - jb[kRootJoint][i];
        const double d_ref_len = ref_unit.dot(d_ref);
        double g = 2.0 * beta.beta[i];
        for (int b = 0; b < kNumBones; ++b) {
            const int child = b + 1;
            const int parent = KinematicTree::parent(child);
            const double len = off[child].norm();
            double d_len;
            if (b == ref_bone) {
                d_len = 0.0;
            } else {
                const Vec3 d_off = jb[child][i] - jb[parent][i];
                d_len = (off[child].dot(d_off) / len) / ref_len - len / (ref_len * ref_len) * d_ref_len;
            }
            g += 2.0 * err[b] * d_len;
        }
        out.grad[i] = g;
    }
    return out;
}

namespace {
LossReport make_report(std::initializer_list<std::tuple<const char*, double, double>> items) {
    LossReport r;
    for (const auto& [name, value, weight] : items) {
        r.terms[name] = value;
        r.weights[name] = weight;
        r.total += weight * value;
    }
    return r;
}
}  // namespace

LossReport total_seed_loss(double heatmap, double silhouette, const LossWeights& w) {
    return make_report({{"heatmap", heatmap, w.heatmap}, {"silhouette", silhouette, w.silhouette}});
}

LossReport total_lift_loss(double joint, double depth, const LossWeights& w) {
    return make_report({{"joint", joint, w.joint}, {"depth", depth, w.depth}});
}

LossReport total_ik_loss(double quaternion, double shape, double joint, const LossWeights& w) {
    return make_report({{"quaternion", quaternion, w.quaternion}, {"shape", shape, w.shape}, {"joint", joint, w.joint}});
}

}  // namespace handik
