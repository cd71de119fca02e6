#include "handik/geom.hpp"

#include "helpers.hpp"

#include <doctest.h>

using namespace handik;

TEST_CASE("quat_mul identity, inverse and composition") {
    std::mt19937_64 rng(1);
    const Quat q = testutil::random_quat(rng);
    const Quat iq = quat_mul(Quat::identity(), q);
    CHECK(iq.dot(q) == doctest::Approx(1.0).epsilon(1e-12));
    const Quat e = quat_mul(q, q.conj());
    CHECK(e.w == doctest::Approx(1.0));
    CHECK(std::abs(e.x) + std::abs(e.y) + std::abs(e.z) < 1e-12);

    const Quat z90 = quat_from_axis_angle(Vec3::UnitZ(), M_PI / 2);
    const Quat z180 = quat_mul(z90, z90);
    const Mat3 oracle = testutil::rodrigues(Vec3::UnitZ(), M_PI / 2) * testutil::rodrigues(Vec3::UnitZ(), M_PI / 2);
    CHECK((quat_to_matrix(z180) - oracle).norm() < 1e-12);
    CHECK((quat_rotate(z180, Vec3::UnitX()) - Vec3(-1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("quat_rotate preserves norm and is a group action") {
    std::mt19937_64 rng(2);
    CHECK((quat_rotate(Quat::identity(), Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() == 0.0);
    CHECK((quat_rotate(quat_from_axis_angle(Vec3::UnitZ(), M_PI / 2), Vec3::UnitX()) - Vec3::UnitY()).norm() < 1e-12);
    for (int i = 0; i < 1000; ++i) {
        const Quat a = testutil::random_quat(rng), b = testutil::random_quat(rng);
        const Vec3 v = testutil::random_vec(rng, 3.0);
        CHECK(std::abs(quat_rotate(a, v).norm() - v.norm()) < 1e-9);
        CHECK((quat_rotate(quat_mul(a, b), v) - quat_rotate(a, quat_rotate(b, v))).norm() < 1e-9);
        CHECK((quat_rotate(-a, v) - quat_rotate(a, v)).norm() < 1e-12);
    }
}

TEST_CASE("quat_rotate agrees with an independent Rodrigues matrix") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const Vec3 axis = testutil::random_vec(rng);
        const double angle = std::uniform_real_distribution<double>(-3, 3)(rng);
        const Vec3 v = testutil::random_vec(rng);
        const Vec3 expect = testutil::rodrigues(axis, angle) * v;
        CHECK((quat_rotate(quat_from_axis_angle(axis, angle), v) - expect).norm() < 1e-12);
        CHECK((quat_to_matrix(quat_from_axis_angle(axis, angle)) - testutil::rodrigues(axis, angle)).norm() < 1e-12);
    }
}

TEST_CASE("axis-angle conversion") {
    const Quat zero = quat_from_axis_angle(Vec3(0.3, -2, 1), 0.0);
    CHECK(zero == Quat::identity());
    CHECK_NOTHROW(quat_from_axis_angle(Vec3::Zero(), 0.0));
    CHECK_THROWS_AS(quat_from_axis_angle(Vec3::Zero(), 0.5), GeometryError);

    const Quat zpi = quat_from_axis_angle(Vec3::UnitZ(), M_PI);
    CHECK(std::abs(zpi.w) < 1e-15);
    CHECK(zpi.z == doctest::Approx(1.0));

    const Quat diag = quat_from_axis_angle(Vec3(1, 1, 1) / std::sqrt(3.0), M_PI / 3);
    CHECK(diag.w == doctest::Approx(0.8660254037844386).epsilon(1e-12));

    std::mt19937_64 rng(4);
    for (int i = 0; i < 500; ++i) {
        const Vec3 axis = testutil::random_vec(rng).normalized();
        const double angle = std::uniform_real_distribution<double>(1e-3, M_PI - 1e-3)(rng);
        const auto [ax, an] = quat_to_axis_angle(quat_from_axis_angle(axis, angle));
        CHECK(std::abs(an - angle) < 1e-7);
        CHECK((ax - axis).norm() < 1e-7);
    }
    const auto [ax0, an0] = quat_to_axis_angle(Quat::identity());
    CHECK(an0 == 0.0);
    CHECK(ax0 == Vec3::UnitX());
    // slightly non-unit input must not produce NaN
    const auto [ax1, an1] = quat_to_axis_angle(Quat{1.0 + 1e-12, 0, 0, 0});
    CHECK(std::isfinite(an1));
    CHECK(ax1.allFinite());
}

TEST_CASE("exp and log are inverse") {
    std::mt19937_64 rng(5);
    CHECK(quat_exp(Vec3::Zero()) == Quat::identity());
    for (int i = 0; i < 200; ++i) {
        Vec3 r = testutil::random_vec(rng);
        if (r.norm() > 3.0) r *= 3.0 / r.norm();
        CHECK((quat_log(quat_exp(r)) - r).norm() < 1e-10);
    }
}

TEST_CASE("canonical sign and normalization") {
    const Quat q{-0.5, 0.5, -0.5, 0.5};
    CHECK(canonical_sign(q).w == 0.5);
    CHECK(canonical_sign(canonical_sign(q)) == canonical_sign(q));
    CHECK(Quat{2, 0, 0, 0}.normalized() == Quat::identity());
    CHECK(std::abs(Quat{1, 2, 3, 4}.normalized().norm() - 1.0) < 1e-12);
    CHECK_THROWS_AS(Quat({0, 0, 0, 0}).normalized(), GeometryError);
}

TEST_CASE("matrix jacobian matches finite differences") {
    std::mt19937_64 rng(6);
    const Quat q = testutil::random_quat(rng);
    const auto jac = quat_to_matrix_jacobian(q);
    const double h = 1e-6;
    for (int m = 0; m < 4; ++m) {
        Eigen::Vector4d c = q.coeffs(), d = q.coeffs();
        c[m] += h;
        d[m] -= h;
        const Mat3 fd = (quat_to_matrix(Quat::from_coeffs(c)) - quat_to_matrix(Quat::from_coeffs(d))) / (2 * h);
        CHECK((fd - jac[m]).norm() < 1e-8);
    }
}

TEST_CASE("rigid transforms") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const RigidTransform a{testutil::random_quat(rng), testutil::random_vec(rng)};
        const RigidTransform b{testutil::random_quat(rng), testutil::random_vec(rng)};
        const RigidTransform c{testutil::random_quat(rng), testutil::random_vec(rng)};
        const Vec3 p = testutil::random_vec(rng);
        CHECK(((a * b) * c).apply(p).isApprox((a * (b * c)).apply(p), 1e-9));
        CHECK(((a.inverse() * a).apply(p) - p).norm() < 1e-9);
        CHECK(((a * b).apply(p) - a.apply(b.apply(p))).norm() < 1e-9);
    }
}

TEST_CASE("pinhole projection") {
    const CameraIntrinsics intr(100, 100, 32, 32);
    const PixelCoord c = project(intr, Vec3(0, 0, 1));
    CHECK(c.u == 32.0);
    CHECK(c.v == 32.0);
    const PixelCoord p = project(intr, Vec3(0.1, 0, 1));
    CHECK(p.u == doctest::Approx(42.0).epsilon(1e-14));
    CHECK(p.v == 32.0);
    CHECK(unproject(intr, {42, 32}, 2.0).x() == doctest::Approx(0.2).epsilon(1e-14));
    CHECK((unproject(intr, {32, 32}, 1.0) - Vec3(0, 0, 1)).norm() == 0.0);
    CHECK_THROWS_AS(project(intr, Vec3(0, 0, 0)), GeometryError);
    CHECK_THROWS_AS(project(intr, Vec3(0, 0, -1)), GeometryError);
    CHECK_THROWS_AS(unproject(intr, {1, 1}, 0.0), GeometryError);
    CHECK_THROWS_AS(CameraIntrinsics(0, 1, 0, 0), GeometryError);
    CHECK_THROWS_AS(CameraIntrinsics(1, -1, 0, 0), GeometryError);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1, 1), z(0.2, 5);
    const CameraIntrinsics cam(520.5, 480.25, 311.1, 245.7);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 x(u(rng), u(rng), z(rng));
        const Vec3 back = unproject(cam, project(cam, x), x.z());
        CHECK((back - x).norm() / x.norm() < 1e-12);
    }
}
