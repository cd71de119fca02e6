#pragma once

#include "handik/geom.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <string>

namespace handik {

inline constexpr int kNumJoints = 21;
inline constexpr int kNumArticulated = 16;
inline constexpr int kNumBones = 20;
inline constexpr int kNumFingers = 5;
inline constexpr int kRootJoint = 0;
/// Scale reference: wrist -> middle-finger MCP.
inline constexpr int kReferenceJoint = 9;

// Joint order: wrist = 0, then chain-major thumb 1-4, index 5-8, middle 9-12,
// ring 13-16, pinky 17-20; within a chain proximal -> distal, fingertip last.
// Bone b connects parent(b + 1) -> b + 1.

using Pose = std::array<Quat, kNumArticulated>;
using Offsets = std::array<Vec3, kNumJoints>;
using BoneLengths = std::array<double, kNumBones>;

Pose identity_pose();

enum class Units { Millimeters, Normalized };

struct JointSet {
    std::array<Vec3, kNumJoints> positions{};
    Units units = Units::Millimeters;

    Vec3& operator[](int j) { return positions[j]; }
    const Vec3& operator[](int j) const { return positions[j]; }
};

struct NormalizedPose {
    std::array<Vec3, kNumJoints> xbar{};
    /// Unit parent->joint directions; the root slot stays zero.
    std::array<Vec3, kNumJoints> kbar{};
};

class KinematicError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class KinematicTree {
public:
    /// Fixed 21-joint topology with the given rest offsets. offsets[0] is the
    /// root position; offsets[j] the rest vector parent(j) -> j.
    explicit KinematicTree(const Offsets& rest_offsets);
    static KinematicTree from_rest_joints(const std::array<Vec3, kNumJoints>& rest_joints);

    static int parent(int joint);
    static bool is_articulated(int joint);
    /// Index into a Pose for an articulated joint, -1 for fingertips.
    static int pose_index(int joint);
    static int joint_of_pose_index(int pose_index);
    static const std::string& name(int joint);

    const Offsets& rest_offsets() const { return rest_offset_; }

    nlohmann::json to_json() const;
    static KinematicTree from_json(const nlohmann::json& j);

private:
    Offsets rest_offset_{};
};

/// Procedural rest skeleton of the default hand (model units = mm). The hand
/// model tessellates its rings around these centres, so the regressed joints
/// at zero shape reproduce them.
const std::array<Vec3, kNumJoints>& default_rest_joints();
KinematicTree default_tree();

struct FkResult {
    JointSet joints;
    /// Global rotation and position of each joint's frame.
    std::array<Mat3, kNumJoints> rotations{};
};

FkResult forward_kinematics(const Pose& pose, const Offsets& offsets);
/// Global per-joint transforms in quaternion form.
std::array<RigidTransform, kNumJoints> global_transforms(const Pose& pose, const Offsets& offsets);

NormalizedPose normalize_joints(const JointSet& joints);
BoneLengths bone_lengths(const JointSet& joints);
BoneLengths bone_lengths(const std::array<Vec3, kNumJoints>& positions);

/// Joint offsets from absolute positions (offsets[0] = root position).
Offsets offsets_from_joints(const std::array<Vec3, kNumJoints>& joints);

}  // namespace handik
