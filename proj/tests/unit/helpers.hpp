#pragma once

#include "handik/geom.hpp"
#include "handik/kinematics.hpp"

#include <cmath>
#include <random>

namespace testutil {

inline handik::Quat random_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return handik::Quat{n(rng), n(rng), n(rng), n(rng)}.normalized();
}

inline handik::Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    return {n(rng), n(rng), n(rng)};
}

/// Random pose with rotation angles of roughly `spread` radians.
inline handik::Pose random_pose(std::mt19937_64& rng, double spread = 0.6) {
    handik::Pose p;
    for (auto& q : p) q = handik::quat_exp(random_vec(rng, spread));
    return p;
}

/// Independent rotation matrix from axis-angle (Rodrigues).
inline handik::Mat3 rodrigues(const handik::Vec3& axis, double angle) {
    const handik::Vec3 k = axis.normalized();
    handik::Mat3 kx;
    kx << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
    return handik::Mat3::Identity() + std::sin(angle) * kx + (1 - std::cos(angle)) * kx * kx;
}

inline double rel_err(double analytic, double numeric, double floor = 1e-7) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace testutil
