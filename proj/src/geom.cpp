#include "handik/geom.hpp"

#include <algorithm>
#include <cmath>

namespace handik {

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw GeometryError("cannot normalize a zero or non-finite quaternion");
    }
    return {w / n, x / n, y / n, z / n};
}

Quat quat_mul(const Quat& a, const Quat& b) {
    const Quat r{a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                 a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                 a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                 a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
    return r.normalized();
}

Vec3 quat_rotate(const Quat& q, const Vec3& v) {
    // v' = v + 2 u x (u x v + w v), u = vector part
    const Vec3 u(q.x, q.y, q.z);
    const Vec3 t = 2.0 * u.cross(v);
    return v + q.w * t + u.cross(t);
}

Quat quat_from_axis_angle(const Vec3& axis, double angle) {
    if (angle == 0.0) return Quat::identity();
    const double n = axis.norm();
    if (!(n > 0.0)) throw GeometryError("degenerate rotation axis with nonzero angle");
    const Vec3 a = axis / n;
    const double s = std::sin(0.5 * angle);
    return Quat{std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s}.normalized();
}

std::pair<Vec3, double> quat_to_axis_angle(const Quat& q) {
    const Quat c = canonical_sign(q.normalized());
    const double w = std::clamp(c.w, -1.0, 1.0);
    const Vec3 v(c.x, c.y, c.z);
    const double s = v.norm();
    if (s < 1e-300) return {Vec3::UnitX(), 0.0};
    // atan2 keeps precision near both 0 and pi where acos(w) alone would not.
    const double angle = 2.0 * std::atan2(s, w);
    return {v / s, angle};
}

Quat quat_exp(const Vec3& rotvec) {
    const double angle = rotvec.norm();
    if (angle < 1e-12) {
        // second-order expansion; the result is normalized anyway
        return Quat{1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z()}.normalized();
    }
    return quat_from_axis_angle(rotvec / angle, angle);
}

Vec3 quat_log(const Quat& q) {
    const auto [axis, angle] = quat_to_axis_angle(q);
    return axis * angle;
}

Quat canonical_sign(const Quat& q) { return q.w < 0.0 ? -q : q; }

Mat3 quat_to_matrix(const Quat& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

std::array<Mat3, 4> quat_to_matrix_jacobian(const Quat& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    std::array<Mat3, 4> d;
    d[0] << 0, -2 * z, 2 * y,
        2 * z, 0, -2 * x,
        -2 * y, 2 * x, 0;
    d[1] << 0, 2 * y, 2 * z,
        2 * y, -4 * x, -2 * w,
        2 * z, 2 * w, -4 * x;
    d[2] << -4 * y, 2 * x, 2 * w,
        2 * x, 0, 2 * z,
        -2 * w, 2 * z, -4 * y;
    d[3] << -4 * z, -2 * w, 2 * x,
        2 * w, -4 * z, 2 * y,
        2 * x, 2 * y, 0;
    return d;
}

RigidTransform RigidTransform::inverse() const {
    const Quat inv = rotation.conj();
    return {inv, -quat_rotate(inv, translation)};
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
    return {quat_mul(rotation, rhs.rotation), apply(rhs.translation)};
}

CameraIntrinsics::CameraIntrinsics(double fx_, double fy_, double cx_, double cy_)
    : fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
    if (!(fx > 0.0) || !(fy > 0.0)) throw GeometryError("focal lengths must be positive");
}

PixelCoord project(const CameraIntrinsics& intr, const Vec3& p) {
    if (!(p.z() > 0.0)) throw GeometryError("point is behind the camera (z <= 0)");
    return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

Vec3 unproject(const CameraIntrinsics& intr, const PixelCoord& uv, double z) {
    if (!(z > 0.0)) throw GeometryError("unproject depth must be positive");
    return {(uv.u - intr.cx) * z / intr.fx, (uv.v - intr.cy) * z / intr.fy, z};
}

}  // namespace handik
