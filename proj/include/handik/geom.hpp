#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

namespace handik {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hamilton quaternion, scalar first, right-handed. Not every instance is
/// unit; the operations below document what they require.
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static constexpr Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }

    double norm() const;
    Quat normalized() const;
    Quat conj() const { return {w, -x, -y, -z}; }
    Quat operator-() const { return {-w, -x, -y, -z}; }
    double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
    Eigen::Vector4d coeffs() const { return {w, x, y, z}; }
    static Quat from_coeffs(const Eigen::Vector4d& c) { return {c[0], c[1], c[2], c[3]}; }

    bool operator==(const Quat&) const = default;
};

/// Hamilton product a*b, renormalized.
Quat quat_mul(const Quat& a, const Quat& b);
Vec3 quat_rotate(const Quat& q, const Vec3& v);

Quat quat_from_axis_angle(const Vec3& axis, double angle);
/// Inverse of quat_from_axis_angle; returns (unit axis, angle in [0, pi]).
/// Identity maps to (x-axis, 0).
std::pair<Vec3, double> quat_to_axis_angle(const Quat& q);

/// Rotation vector (axis * angle) to quaternion; zero maps to identity.
Quat quat_exp(const Vec3& rotvec);
Vec3 quat_log(const Quat& q);

/// Sign representative with w >= 0.
Quat canonical_sign(const Quat& q);

Mat3 quat_to_matrix(const Quat& q);
/// Derivatives of quat_to_matrix w.r.t. (w, x, y, z), evaluated at q as given
/// (no normalization applied).
std::array<Mat3, 4> quat_to_matrix_jacobian(const Quat& q);

struct RigidTransform {
    Quat rotation = Quat::identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }

    Vec3 apply(const Vec3& p) const { return quat_rotate(rotation, p) + translation; }
    RigidTransform inverse() const;
    /// (*this) after `rhs`: x -> this(rhs(x)).
    RigidTransform operator*(const RigidTransform& rhs) const;
};

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    CameraIntrinsics() = default;
    CameraIntrinsics(double fx_, double fy_, double cx_, double cy_);
};

struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

PixelCoord project(const CameraIntrinsics& intr, const Vec3& p);
Vec3 unproject(const CameraIntrinsics& intr, const PixelCoord& uv, double z);

}  // namespace handik
