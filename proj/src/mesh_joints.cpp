#include "handik/mesh_joints.hpp"

#include <map>

namespace handik {

MeshJointLayer::MeshJointLayer(const HandModel& model)
    : rest_joints_(model.rest_joints()), joint_basis_(model.joint_shape_basis()) {
    std::map<int, int> support;
    for (int j = 0; j < kNumJoints; ++j) {
        for (const auto& e : model.joint_regressor()[j]) {
            auto [it, inserted] = support.try_emplace(e.vertex, static_cast<int>(templ_.size()));
            if (inserted) {
                templ_.push_back(model.template_vertices()[e.vertex]);
                std::array<Vec3, kNumShape> b;
                for (int i = 0; i < kNumShape; ++i) b[i] = model.shape_mode(i)[e.vertex];
                basis_.push_back(b);
                skin_.push_back(model.skin_weights()[e.vertex]);
            }
            regressor_[j].push_back({it->second, e.weight});
        }
    }
}

std::array<Vec3, kNumJoints> MeshJointLayer::forward(const Pose& pose, const HandShape& shape, Cache& c) const {
    c.pose = pose;
    for (int j = 0; j < kNumJoints; ++j) {
        Vec3 r = rest_joints_[j];
        for (int i = 0; i < kNumShape; ++i) r += shape.beta[i] * joint_basis_[j][i];
        c.rest[j] = r;
    }
    c.offsets = offsets_from_joints(c.rest);
    for (int a = 0; a < kNumArticulated; ++a) c.local[a] = quat_to_matrix(pose[a]);
    c.rot[0] = c.local[0];
    c.pos[0] = c.offsets[0];
    for (int j = 1; j < kNumJoints; ++j) {
        const int p = KinematicTree::parent(j);
        c.pos[j] = c.pos[p] + c.rot[p] * c.offsets[j];
        const int a = KinematicTree::pose_index(j);
        c.rot[j] = a < 0 ? c.rot[p] : Mat3(c.rot[p] * c.local[a]);
    }
    const std::size_t n = templ_.size();
    c.shaped.resize(n);
    std::vector<Vec3> posed(n);
    for (std::size_t s = 0; s < n; ++s) {
        Vec3 v = templ_[s];
        for (int i = 0; i < kNumShape; ++i) v += shape.beta[i] * basis_[s][i];
        c.shaped[s] = v;
        Vec3 out = Vec3::Zero();
        for (int k = 0; k < skin_[s].count; ++k) {
            const auto& inf = skin_[s].influences[k];
            const int j = KinematicTree::joint_of_pose_index(inf.joint);
            out += inf.weight * (c.rot[j] * (v - c.rest[j]) + c.pos[j]);
        }
        posed[s] = out;
    }
    std::array<Vec3, kNumJoints> joints;
    for (int j = 0; j < kNumJoints; ++j) {
        Vec3 acc = Vec3::Zero();
        for (const auto& e : regressor_[j]) acc += e.weight * posed[e.support];
        joints[j] = acc;
    }
    return joints;
}

MeshJointLayer::Gradient MeshJointLayer::backward(const Cache& c, const std::array<Vec3, kNumJoints>& gx) const {
    const std::size_t n = templ_.size();
    std::vector<Vec3> g_posed(n, Vec3::Zero());
    for (int j = 0; j < kNumJoints; ++j) {
        for (const auto& e : regressor_[j]) g_posed[e.support] += e.weight * gx[j];
    }

    std::array<Mat3, kNumJoints> g_rot;
    std::array<Vec3, kNumJoints> g_pos, g_rest, g_off;
    for (int j = 0; j < kNumJoints; ++j) {
        g_rot[j].setZero();
        g_pos[j].setZero();
        g_rest[j].setZero();
        g_off[j].setZero();
    }
    std::vector<Vec3> g_shaped(n, Vec3::Zero());

    // LBS: posed_s = sum_k w_k (R_j (v_s - J_j) + p_j)
    for (std::size_t s = 0; s < n; ++s) {
        const Vec3& g = g_posed[s];
        for (int k = 0; k < skin_[s].count; ++k) {
            const auto& inf = skin_[s].influences[k];
            const int j = KinematicTree::joint_of_pose_index(inf.joint);
            const Vec3 d = c.shaped[s] - c.rest[j];
            g_rot[j] += inf.weight * g * d.transpose();
            g_pos[j] += inf.weight * g;
            const Vec3 back = inf.weight * (c.rot[j].transpose() * g);
            g_shaped[s] += back;
            g_rest[j] -= back;
        }
    }

    // Forward kinematics in reverse topological order.
    Gradient out;
    for (int j = kNumJoints - 1; j >= 1; --j) {
        const int p = KinematicTree::parent(j);
        g_pos[p] += g_pos[j];
        g_rot[p] += g_pos[j] * c.offsets[j].transpose();
        g_off[j] += c.rot[p].transpose() * g_pos[j];
        const int a = KinematicTree::pose_index(j);
        if (a < 0) {
            g_rot[p] += g_rot[j];
        } else {
            g_rot[p] += g_rot[j] * c.local[a].transpose();
            const Mat3 g_local = c.rot[p].transpose() * g_rot[j];
            const auto dq = quat_to_matrix_jacobian(c.pose[a]);
            for (int m = 0; m < 4; ++m) out.pose[a][m] = (g_local.array() * dq[m].array()).sum();
        }
    }
    g_off[0] += g_pos[0];
    {
        const auto dq = quat_to_matrix_jacobian(c.pose[0]);
        for (int m = 0; m < 4; ++m) out.pose[0][m] = (g_rot[0].array() * dq[m].array()).sum();
    }

    // offsets[j] = J_j - J_parent(j), offsets[0] = J_0
    g_rest[0] += g_off[0];
    for (int j = 1; j < kNumJoints; ++j) {
        g_rest[j] += g_off[j];
        g_rest[KinematicTree::parent(j)] -= g_off[j];
    }

    for (int i = 0; i < kNumShape; ++i) {
        double acc = 0.0;
        for (int j = 0; j < kNumJoints; ++j) acc += g_rest[j].dot(joint_basis_[j][i]);
        for (std::size_t s = 0; s < n; ++s) acc += g_shaped[s].dot(basis_[s][i]);
        out.beta[i] = acc;
    }
    return out;
}

}  // namespace handik
