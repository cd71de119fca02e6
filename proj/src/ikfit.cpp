#include "handik/ikfit.hpp"

#include "handik/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace handik {

namespace {

constexpr int kPoseParams = 3 * kNumArticulated;
constexpr int kParams = kPoseParams + kNumShape;
constexpr int kResiduals = 3 * kNumJoints + kNumShape;

Quat from_matrix(const Mat3& r) {
    const Eigen::Quaterniond q(r);
    return Quat{q.w(), q.x(), q.y(), q.z()}.normalized();
}

/// Rotation taking unit direction a onto unit direction b with no twist.
Quat swing(const Vec3& a, const Vec3& b) {
    const double c = a.dot(b);
    if (c < -1.0 + 1e-12) {
        Vec3 axis = a.cross(Vec3::UnitX());
        if (axis.norm() < 1e-6) axis = a.cross(Vec3::UnitY());
        return quat_from_axis_angle(axis.normalized(), M_PI);
    }
    const Vec3 v = a.cross(b);
    return Quat{1.0 + c, v.x(), v.y(), v.z()}.normalized();
}

struct State {
    Pose pose;
    HandShape shape;
};

State perturbed(const State& s, const Eigen::VectorXd& delta) {
    State out = s;
    for (int a = 0; a < kNumArticulated; ++a) {
        const Vec3 d = delta.segment<3>(3 * a);
        if (d.squaredNorm() > 0.0) out.pose[a] = quat_mul(s.pose[a], quat_exp(d));
    }
    for (int i = 0; i < kNumShape; ++i) out.shape.beta[i] += delta[kPoseParams + i];
    return out;
}

Eigen::VectorXd residual(const State& s, const NormalizedPose& target, const HandModel& model, double sqrt_wb) {
    const auto x = model_normalized_joints(s.pose, s.shape, model);
    Eigen::VectorXd r(kResiduals);
    for (int j = 0; j < kNumJoints; ++j) r.segment<3>(3 * j) = x[j] - target.xbar[j];
    for (int i = 0; i < kNumShape; ++i) r[3 * kNumJoints + i] = sqrt_wb * s.shape.beta[i];
    return r;
}

double joint_rms(const Eigen::VectorXd& r) {
    return std::sqrt(r.head(3 * kNumJoints).squaredNorm() / kNumJoints);
}

double median_of(std::vector<double> v) { return percentile(std::move(v), 0.5); }

}  // namespace

void FitConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(damping > 0.0)) throw std::invalid_argument("damping must be > 0");
    if (!(tol >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
    if (!(beta_weight >= 0.0)) throw std::invalid_argument("beta weight must be >= 0");
    if (!(jacobian_step > 0.0)) throw std::invalid_argument("jacobian step must be > 0");
}

nlohmann::json FitConfig::to_json() const {
    return {{"max_iters", max_iters},         {"damping", damping},
            {"tol", tol},                     {"beta_weight", beta_weight},
            {"jacobian_step", jacobian_step}, {"init", init == FitInit::Seeded ? "seeded" : "identity"}};
}

nlohmann::json FitResult::to_json() const {
    nlohmann::json q = nlohmann::json::array();
    for (const Quat& e : quats) q.push_back({e.w, e.x, e.y, e.z});
    return {{"quats", q},
            {"beta", beta.beta},
            {"residual_rms", residual_rms},
            {"iterations", iterations},
            {"converged", converged}};
}

std::array<Vec3, kNumJoints> model_normalized_joints(const Pose& pose, const HandShape& shape, const HandModel& model) {
    const Offsets off = offsets_from_joints(model.shaped_joints(shape));
    return normalize_joints(forward_kinematics(pose, off).joints).xbar;
}

FitStart seed_start(const NormalizedPose& target, const HandModel& model) {
    FitStart start;
    const auto& rest = model.rest_joints();
    const Offsets off = offsets_from_joints(rest);

    // Palm: wrist -> {thumb CMC, MCPs} are rigid in the root frame.
    Mat3 h = Mat3::Zero();
    for (int c : {1, 5, 9, 13, 17}) h += (rest[c] - rest[0]) * target.xbar[c].transpose();
    const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 fix = Mat3::Identity();
    fix(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Mat3 root = svd.matrixV() * fix * svd.matrixU().transpose();
    start.pose[0] = from_matrix(root);

    std::array<Mat3, kNumJoints> global;
    global[0] = quat_to_matrix(start.pose[0]);
    for (int j = 1; j < kNumJoints; ++j) {
        const int p = KinematicTree::parent(j);
        const int a = KinematicTree::pose_index(j);
        if (a < 0) {
            global[j] = global[p];
            continue;
        }
        const Vec3 want = target.xbar[j + 1] - target.xbar[j];
        if (want.norm() < 1e-12) {
            global[j] = global[p];
            continue;
        }
        const Vec3 local_want = (global[p].transpose() * want).normalized();
        start.pose[a] = swing(off[j + 1].normalized(), local_want);
        global[j] = global[p] * quat_to_matrix(start.pose[a]);
    }
    return start;
}

FitResult fit(const JointSet& target_joints, const HandModel& model, const FitConfig& cfg,
              const std::optional<FitStart>& start) {
    cfg.validate();
    const NormalizedPose target = normalize_joints(target_joints);
    State s;
    if (start) {
        s = {start->pose, start->shape};
    } else if (cfg.init == FitInit::Seeded) {
        const FitStart seed = seed_start(target, model);
        s = {seed.pose, seed.shape};
    } else {
        s = {identity_pose(), HandShape::zero()};
    }
    for (Quat& q : s.pose) q = q.normalized();

    const double sqrt_wb = std::sqrt(cfg.beta_weight);
    Eigen::VectorXd r = residual(s, target, model, sqrt_wb);
    double cost = r.squaredNorm();
    double lambda = cfg.damping;
    bool need_jacobian = true;
    Eigen::MatrixXd jac(kResiduals, kParams);
    Eigen::MatrixXd a(kParams, kParams);
    Eigen::VectorXd g(kParams);

    FitResult out;
    out.cost_history.push_back(cost);
    int iter = 0;
    for (; iter < cfg.max_iters && joint_rms(r) >= cfg.tol; ++iter) {
        if (need_jacobian) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(kParams);
            for (int k = 0; k < kParams; ++k) {
                e[k] = cfg.jacobian_step;
                jac.col(k) = (residual(perturbed(s, e), target, model, sqrt_wb) - r) / cfg.jacobian_step;
                e[k] = 0.0;
            }
            a = jac.transpose() * jac;
            g = jac.transpose() * r;
            need_jacobian = false;
        }
        Eigen::MatrixXd damped = a;
        damped.diagonal().array() += lambda;
        const Eigen::VectorXd step = damped.ldlt().solve(-g);
        if (!step.allFinite()) {
            lambda *= 10.0;
            continue;
        }
        const State cand = perturbed(s, step);
        const Eigen::VectorXd rc = residual(cand, target, model, sqrt_wb);
        const double cc = rc.squaredNorm();
        if (std::isfinite(cc) && cc < cost) {
            s = cand;
            r = rc;
            cost = cc;
            out.cost_history.push_back(cost);
            lambda = std::max(lambda / 10.0, 1e-15);
            need_jacobian = true;
        } else {
            lambda *= 10.0;
            if (lambda > 1e15) break;
        }
    }
    out.quats = s.pose;
    out.beta = s.shape;
    out.residual_rms = joint_rms(r);
    out.iterations = iter;
    out.converged = out.residual_rms < cfg.tol;
    return out;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

nlohmann::json CompareReport::to_json() const {
    return {{"samples", net_rms.size()}, {"net_median", net_median},     {"oracle_median", oracle_median},
            {"net_p90", net_p90},         {"oracle_p90", oracle_p90},     {"median_ratio", median_ratio},
            {"max_ratio", max_ratio},     {"pass", pass}};
}

CompareReport compare_rms(std::vector<double> net_rms, std::vector<double> oracle_rms, double max_ratio) {
    if (net_rms.size() != oracle_rms.size()) throw std::invalid_argument("compare_rms: size mismatch");
    CompareReport rep;
    rep.net_median = median_of(net_rms);
    rep.oracle_median = median_of(oracle_rms);
    rep.net_p90 = percentile(net_rms, 0.9);
    rep.oracle_p90 = percentile(oracle_rms, 0.9);
    if (rep.oracle_median > 0.0) {
        rep.median_ratio = rep.net_median / rep.oracle_median;
    } else {
        rep.median_ratio = rep.net_median == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    rep.max_ratio = max_ratio;
    rep.pass = rep.median_ratio <= max_ratio;
    rep.net_rms = std::move(net_rms);
    rep.oracle_rms = std::move(oracle_rms);
    return rep;
}

CompareReport compare_to_net(const SikNet& net, const std::vector<SikSample>& samples,
                             const std::vector<std::size_t>& indices, const HandModel& model, const FitConfig& cfg,
                             double max_ratio) {
    const MeshJointLayer layer(model);
    std::vector<double> net_rms(indices.size()), oracle_rms(indices.size());
    parallel_for(indices.size(), [&](std::size_t k) {
        const SikSample& s = samples.at(indices[k]);
        const auto pred = predict_normalized_joints(net, {s.xbar, s.kbar}, layer);
        double sq = 0.0;
        for (int j = 0; j < kNumJoints; ++j) sq += (pred[j] - s.xbar[j]).squaredNorm();
        net_rms[k] = std::sqrt(sq / kNumJoints);
        JointSet target;
        target.positions = s.xbar;
        target.units = Units::Normalized;
        oracle_rms[k] = fit(target, model, cfg).residual_rms;
    });
    return compare_rms(std::move(net_rms), std::move(oracle_rms), max_ratio);
}

}  // namespace handik
