#include "handik/kinematics.hpp"

#include <cmath>

namespace handik {

namespace {

constexpr std::array<int, kNumJoints> kParent = {
    0,                // wrist (self-sentinel)
    0, 1, 2, 3,       // thumb
    0, 5, 6, 7,       // index
    0, 9, 10, 11,     // middle
    0, 13, 14, 15,    // ring
    0, 17, 18, 19,    // pinky
};

const std::array<std::string, kNumJoints> kNames = {
    "wrist",
    "thumb_cmc", "thumb_mcp", "thumb_ip", "thumb_tip",
    "index_mcp", "index_pip", "index_dip", "index_tip",
    "middle_mcp", "middle_pip", "middle_dip", "middle_tip",
    "ring_mcp", "ring_pip", "ring_dip", "ring_tip",
    "pinky_mcp", "pinky_pip", "pinky_dip", "pinky_tip",
};

struct ChainSpec {
    Vec3 base;
    Vec3 direction;
    std::array<double, 3> lengths;
};

std::array<Vec3, kNumJoints> build_default_rest_joints() {
    // Right hand, fingers along +y, palm normal +z, thumb on +x.
    const std::array<ChainSpec, kNumFingers> chains = {{
        {{22.0, 22.0, -6.0}, {0.72, 0.68, -0.12}, {40.0, 31.0, 25.0}},
        {{24.0, 86.0, 0.0}, {0.10, 1.0, 0.0}, {40.0, 24.0, 20.0}},
        {{0.0, 90.0, 0.0}, {0.0, 1.0, 0.0}, {44.0, 28.0, 22.0}},
        {{-20.0, 85.0, 0.0}, {-0.08, 1.0, 0.0}, {41.0, 27.0, 21.0}},
        {{-38.0, 76.0, 0.0}, {-0.18, 1.0, 0.0}, {33.0, 20.0, 18.0}},
    }};
    std::array<Vec3, kNumJoints> joints{};
    joints[0] = Vec3::Zero();
    for (int f = 0; f < kNumFingers; ++f) {
        const ChainSpec& c = chains[f];
        const Vec3 dir = c.direction.normalized();
        const int base = 1 + 4 * f;
        joints[base] = c.base;
        for (int k = 0; k < 3; ++k) joints[base + k + 1] = joints[base + k] + c.lengths[k] * dir;
    }
    return joints;
}

}  // namespace

Pose identity_pose() {
    Pose p;
    p.fill(Quat::identity());
    return p;
}

KinematicTree::KinematicTree(const Offsets& rest_offsets) : rest_offset_(rest_offsets) {
    for (const Vec3& o : rest_offset_) {
        if (!o.allFinite()) throw KinematicError("rest offsets must be finite");
    }
    for (int j = 1; j < kNumJoints; ++j) {
        if (!(rest_offset_[j].norm() > 1e-12)) throw KinematicError("zero-length rest bone into joint " + std::to_string(j));
    }
}

KinematicTree KinematicTree::from_rest_joints(const std::array<Vec3, kNumJoints>& rest_joints) {
    return KinematicTree(offsets_from_joints(rest_joints));
}

int KinematicTree::parent(int joint) { return kParent[joint]; }

bool KinematicTree::is_articulated(int joint) { return joint == 0 || joint % 4 != 0; }

int KinematicTree::pose_index(int joint) {
    if (joint == 0) return 0;
    if (joint % 4 == 0) return -1;
    const int chain = (joint - 1) / 4;
    return 1 + 3 * chain + (joint - 1) % 4;
}

int KinematicTree::joint_of_pose_index(int pose_index) {
    if (pose_index == 0) return 0;
    const int chain = (pose_index - 1) / 3;
    return 1 + 4 * chain + (pose_index - 1) % 3;
}

const std::string& KinematicTree::name(int joint) { return kNames[joint]; }

nlohmann::json KinematicTree::to_json() const {
    nlohmann::json j;
    j["format"] = "handik-skeleton";
    j["version"] = 1;
    j["names"] = kNames;
    j["parent"] = kParent;
    auto offsets = nlohmann::json::array();
    for (const Vec3& o : rest_offset_) offsets.push_back({o.x(), o.y(), o.z()});
    j["rest_offsets"] = offsets;
    auto mask = nlohmann::json::array();
    for (int k = 0; k < kNumJoints; ++k) mask.push_back(is_articulated(k));
    j["articulated"] = mask;
    return j;
}

KinematicTree KinematicTree::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "handik-skeleton") throw KinematicError("not a skeleton document");
    const auto& parents = j.at("parent");
    const auto& offsets = j.at("rest_offsets");
    if (parents.size() != kNumJoints || offsets.size() != kNumJoints) {
        throw KinematicError("skeleton must have 21 joints");
    }
    Offsets off{};
    for (int k = 0; k < kNumJoints; ++k) {
        if (parents[k].get<int>() != kParent[k]) throw KinematicError("unsupported skeleton topology");
        off[k] = Vec3(offsets[k][0].get<double>(), offsets[k][1].get<double>(), offsets[k][2].get<double>());
    }
    return KinematicTree(off);
}

const std::array<Vec3, kNumJoints>& default_rest_joints() {
    static const std::array<Vec3, kNumJoints> joints = build_default_rest_joints();
    return joints;
}

KinematicTree default_tree() { return KinematicTree::from_rest_joints(default_rest_joints()); }

FkResult forward_kinematics(const Pose& pose, const Offsets& offsets) {
    FkResult out;
    out.rotations[0] = quat_to_matrix(pose[0]);
    out.joints[0] = offsets[0];
    for (int j = 1; j < kNumJoints; ++j) {
        const int p = kParent[j];
        out.joints[j] = out.joints[p] + out.rotations[p] * offsets[j];
        const int a = KinematicTree::pose_index(j);
        out.rotations[j] = a < 0 ? out.rotations[p] : Mat3(out.rotations[p] * quat_to_matrix(pose[a]));
    }
    return out;
}

std::array<RigidTransform, kNumJoints> global_transforms(const Pose& pose, const Offsets& offsets) {
    std::array<RigidTransform, kNumJoints> g;
    g[0] = {pose[0].normalized(), offsets[0]};
    for (int j = 1; j < kNumJoints; ++j) {
        const int p = kParent[j];
        const int a = KinematicTree::pose_index(j);
        g[j].translation = g[p].apply(offsets[j]);
        g[j].rotation = a < 0 ? g[p].rotation : quat_mul(g[p].rotation, pose[a]);
    }
    return g;
}

NormalizedPose normalize_joints(const JointSet& joints) {
    const Vec3 root = joints[kRootJoint];
    const double scale = (joints[kReferenceJoint] - root).norm();
    if (!(scale > 1e-12) || !std::isfinite(scale)) {
        throw KinematicError("degenerate pose: zero-length reference bone");
    }
    NormalizedPose out;
    for (int j = 0; j < kNumJoints; ++j) out.xbar[j] = (joints[j] - root) / scale;
    out.xbar[kRootJoint] = Vec3::Zero();
    out.kbar[kRootJoint] = Vec3::Zero();
    for (int j = 1; j < kNumJoints; ++j) {
        const Vec3 d = out.xbar[j] - out.xbar[kParent[j]];
        const double n = d.norm();
        if (!(n > 0.0)) throw KinematicError("degenerate pose: zero-length bone");
        out.kbar[j] = d / n;
    }
    return out;
}

BoneLengths bone_lengths(const std::array<Vec3, kNumJoints>& positions) {
    BoneLengths out{};
    for (int b = 0; b < kNumBones; ++b) {
        const int child = b + 1;
        out[b] = (positions[child] - positions[kParent[child]]).norm();
    }
    return out;
}

BoneLengths bone_lengths(const JointSet& joints) { return bone_lengths(joints.positions); }

Offsets offsets_from_joints(const std::array<Vec3, kNumJoints>& joints) {
    Offsets off{};
    off[0] = joints[0];
    for (int j = 1; j < kNumJoints; ++j) off[j] = joints[j] - joints[kParent[j]];
    return off;
}

}  // namespace handik
