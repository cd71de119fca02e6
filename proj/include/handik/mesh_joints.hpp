#pragma once

#include "handik/handmodel.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace handik {

/// Differentiable X(M(Q, beta)): skins only the vertices the joint regressor
/// reads, then regresses joints from them. Numerically the same as
/// mesh_to_joints(skin(shape_template(beta), Q)) but touches a few hundred
/// vertices instead of the whole mesh, and carries a reverse-mode pass.
class MeshJointLayer {
public:
    explicit MeshJointLayer(const HandModel& model);

    struct Cache {
        Pose pose;
        std::array<Vec3, kNumJoints> rest{};
        Offsets offsets{};
        std::array<Mat3, kNumArticulated> local{};
        std::array<Mat3, kNumJoints> rot{};
        std::array<Vec3, kNumJoints> pos{};
        std::vector<Vec3> shaped;
    };

    struct Gradient {
        /// d/d(w, x, y, z) of each pose quaternion, quaternions taken as given.
        std::array<Eigen::Vector4d, kNumArticulated> pose{};
        std::array<double, kNumShape> beta{};
    };

    /// `pose` must hold unit quaternions. Joints are in model units.
    std::array<Vec3, kNumJoints> forward(const Pose& pose, const HandShape& shape, Cache& cache) const;
    Gradient backward(const Cache& cache, const std::array<Vec3, kNumJoints>& grad_joints) const;

    int support_size() const { return static_cast<int>(templ_.size()); }

private:
    struct Entry {
        int support = 0;
        double weight = 0.0;
    };

    std::vector<Vec3> templ_;
    std::vector<std::array<Vec3, kNumShape>> basis_;
    std::vector<SkinWeights> skin_;
    std::array<std::vector<Entry>, kNumJoints> regressor_;
    std::array<Vec3, kNumJoints> rest_joints_{};
    std::array<std::array<Vec3, kNumShape>, kNumJoints> joint_basis_{};
};

}  // namespace handik
