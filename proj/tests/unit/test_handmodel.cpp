#include "handik/handmodel.hpp"
#include "handik/mesh_joints.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace handik;

namespace {
const HandModel& model() {
    static const HandModel m = build_default_model();
    return m;
}

HandShape random_shape(std::mt19937_64& rng, double s = 0.8) {
    std::normal_distribution<double> n(0.0, s);
    HandShape b;
    for (double& v : b.beta) v = n(rng);
    return b;
}
}  // namespace

TEST_CASE("default model structure") {
    const HandModel& m = model();
    CHECK(m.vertex_count() == kDefaultVertexCount);
    std::set<int> bones;
    for (const SkinWeights& w : m.skin_weights()) {
        REQUIRE(w.count >= 1);
        REQUIRE(w.count <= 2);
        double sum = 0.0;
        for (int i = 0; i < w.count; ++i) {
            CHECK(w.influences[i].weight >= 0.0);
            sum += w.influences[i].weight;
            bones.insert(w.influences[i].joint);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    CHECK(bones.size() == kNumArticulated);
    for (const Face& f : m.faces())
        for (int v : f) CHECK((v >= 0 && v < m.vertex_count()));
    for (int j = 0; j < kNumJoints; ++j) {
        double sum = 0.0;
        for (const auto& e : m.joint_regressor()[j]) sum += e.weight;
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    CHECK(build_default_model() == m);
    CHECK(build_default_model(200).vertex_count() == 200);
    CHECK_THROWS_AS(build_default_model(kMinVertexCount - 1), ModelError);
}

TEST_CASE("rest joints reproduce the default skeleton") {
    const auto& rest = model().rest_joints();
    const auto& ref = default_rest_joints();
    const JointSet regressed = regress_joints(model(), model().template_vertices());
    for (int j = 0; j < kNumJoints; ++j) {
        CHECK((rest[j] - ref[j]).norm() < 1e-9);
        CHECK((regressed[j] - rest[j]).norm() < 1e-9);
    }
    const FkResult fk = forward_kinematics(identity_pose(), model().skeleton().rest_offsets());
    for (int j = 0; j < kNumJoints; ++j) CHECK((fk.joints[j] - rest[j]).norm() < 1e-9);
}

TEST_CASE("shape blend is linear and zero shape is the template") {
    std::mt19937_64 rng(21);
    const HandModel& m = model();
    CHECK(shape_template(m, HandShape::zero()) == m.template_vertices());
    const HandShape a = random_shape(rng), b = random_shape(rng);
    HandShape ab;
    for (int i = 0; i < kNumShape; ++i) ab.beta[i] = a.beta[i] + b.beta[i];
    const auto sa = shape_template(m, a), sb = shape_template(m, b), sab = shape_template(m, ab);
    for (int v = 0; v < m.vertex_count(); ++v) {
        CHECK((sab[v] - (sa[v] + sb[v] - m.template_vertices()[v])).norm() < 1e-9);
    }
    const auto joints = m.shaped_joints(ab);
    const JointSet regressed = regress_joints(m, sab);
    for (int j = 0; j < kNumJoints; ++j) CHECK((joints[j] - regressed[j]).norm() < 1e-9);
}

TEST_CASE("global-scale mode scales about the wrist") {
    const HandModel& m = model();
    HandShape s;
    s.beta[static_cast<int>(ShapeMode::GlobalScale)] = 0.5;
    const auto shaped = shape_template(m, s);
    const Vec3 wrist = m.rest_joints()[kRootJoint];
    // One common factor for every vertex: shaped - wrist = k (template - wrist).
    double k = 0.0;
    int n = 0;
    for (int v = 0; v < m.vertex_count(); ++v) {
        const Vec3 d = m.template_vertices()[v] - wrist;
        if (d.norm() < 1.0) continue;
        k += (shaped[v] - wrist).dot(d) / d.squaredNorm();
        ++n;
    }
    k /= n;
    CHECK(k > 1.0);
    for (int v = 0; v < m.vertex_count(); ++v) {
        const Vec3 d = m.template_vertices()[v] - wrist;
        CHECK((shaped[v] - wrist - k * d).norm() < 1e-9 * std::max(1.0, d.norm()));
    }
    const BoneLengths l0 = bone_lengths(m.rest_joints()), l1 = bone_lengths(m.shaped_joints(s));
    for (int b = 0; b < kNumBones; ++b) CHECK(std::abs(l1[b] / l0[b] - k) < 1e-9);
}

TEST_CASE("regressor is affine") {
    const HandModel& m = model();
    const Vec3 t(3, -4, 12);
    std::vector<Vec3> moved = m.template_vertices();
    for (Vec3& p : moved) p += t;
    const JointSet j = regress_joints(m, moved);
    for (int k = 0; k < kNumJoints; ++k) CHECK((j[k] - m.rest_joints()[k] - t).norm() < 1e-9);
    CHECK_THROWS_AS(regress_joints(m, std::vector<Vec3>(5)), ModelError);
}

TEST_CASE("linear blend skinning") {
    std::mt19937_64 rng(22);
    const HandModel& m = model();
    const HandShape beta = random_shape(rng, 0.5);
    const auto shaped = shape_template(m, beta);
    const HandMesh ident = skin(m, shaped, identity_pose());
    CHECK(ident.vertices == shaped);

    const Offsets off = offsets_from_joints(regress_joints(m, shaped).positions);
    const auto rest = regress_joints(m, shaped);
    for (int trial = 0; trial < 20; ++trial) {
        const Pose pose = testutil::random_pose(rng);
        const auto g = global_transforms(pose, off);
        const HandMesh mesh = skin(m, shaped, pose);
        for (int v = 0; v < m.vertex_count(); ++v) {
            const SkinWeights& w = m.skin_weights()[v];
            Vec3 expect = Vec3::Zero();
            for (int i = 0; i < w.count; ++i) {
                const int j = KinematicTree::joint_of_pose_index(w.influences[i].joint);
                const Vec3 rigid = g[j].apply(shaped[v] - rest[j]);
                expect += w.influences[i].weight * rigid;
            }
            REQUIRE((mesh.vertices[v] - expect).norm() < 1e-9);
        }
    }
    int single = 0, half = 0;
    for (const SkinWeights& w : m.skin_weights()) {
        single += w.count == 1;
        half += w.count == 2 && w.influences[0].weight == 0.5;
    }
    CHECK(single > 0);
    CHECK(half > 0);
}

TEST_CASE("mesh joints follow the skeleton") {
    std::mt19937_64 rng(23);
    const HandModel& m = model();
    const HandMesh rest = skin(m, m.template_vertices(), identity_pose());
    const JointSet a = mesh_to_joints(m, rest);
    for (int j = 0; j < kNumJoints; ++j) CHECK((a[j] - m.rest_joints()[j]).norm() < 1e-9);

    const double ref = (m.rest_joints()[kReferenceJoint] - m.rest_joints()[0]).norm();
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const HandShape beta = random_shape(rng, 0.5);
        const Pose pose = testutil::random_pose(rng, 0.4);
        const HandMesh mesh = posed_mesh(m, beta, pose);
        const JointSet mj = mesh_to_joints(m, mesh);
        const FkResult fk = forward_kinematics(pose, offsets_from_joints(m.shaped_joints(beta)));
        for (int j = 0; j < kNumJoints; ++j) worst = std::max(worst, (mj[j] - fk.joints[j]).norm() / ref);
    }
    CHECK(worst < 0.02);
}

TEST_CASE("mesh joint layer matches the full mesh path") {
    std::mt19937_64 rng(24);
    const HandModel& m = model();
    const MeshJointLayer layer(m);
    CHECK(layer.support_size() < m.vertex_count());
    for (int i = 0; i < 20; ++i) {
        const HandShape beta = random_shape(rng, 0.5);
        const Pose pose = testutil::random_pose(rng);
        MeshJointLayer::Cache cache;
        const auto x = layer.forward(pose, beta, cache);
        const JointSet full = mesh_to_joints(m, posed_mesh(m, beta, pose));
        for (int j = 0; j < kNumJoints; ++j) CHECK((x[j] - full[j]).norm() < 1e-9);
    }
}

TEST_CASE("mesh joint layer gradients match finite differences") {
    std::mt19937_64 rng(25);
    const HandModel& m = model();
    const MeshJointLayer layer(m);
    for (int trial = 0; trial < 5; ++trial) {
        const HandShape beta = random_shape(rng, 0.5);
        const Pose pose = testutil::random_pose(rng);
        std::array<Vec3, kNumJoints> w;
        for (Vec3& v : w) v = testutil::random_vec(rng);
        auto objective = [&](const Pose& p, const HandShape& b) {
            MeshJointLayer::Cache c;
            const auto x = layer.forward(p, b, c);
            double s = 0.0;
            for (int j = 0; j < kNumJoints; ++j) s += w[j].dot(x[j]);
            return s;
        };
        MeshJointLayer::Cache cache;
        layer.forward(pose, beta, cache);
        const auto g = layer.backward(cache, w);
        const double h = 1e-5;
        for (int a = 0; a < kNumArticulated; ++a) {
            for (int c = 0; c < 4; ++c) {
                Pose pp = pose, pm = pose;
                Eigen::Vector4d cp = pp[a].coeffs(), cm = pm[a].coeffs();
                cp[c] += h;
                cm[c] -= h;
                pp[a] = Quat::from_coeffs(cp);
                pm[a] = Quat::from_coeffs(cm);
                const double fd = (objective(pp, beta) - objective(pm, beta)) / (2 * h);
                CHECK(testutil::rel_err(g.pose[a][c], fd, 1e-3) < 1e-4);
            }
        }
        for (int i = 0; i < kNumShape; ++i) {
            HandShape bp = beta, bm = beta;
            bp.beta[i] += h;
            bm.beta[i] -= h;
            const double fd = (objective(pose, bp) - objective(pose, bm)) / (2 * h);
            CHECK(testutil::rel_err(g.beta[i], fd, 1e-3) < 1e-4);
        }
    }
}

TEST_CASE("model serialization and OBJ") {
    const HandModel& m = model();
    CHECK(HandModel::deserialize(m.serialize()) == m);
    const auto path = std::filesystem::temp_directory_path() / "handik_unit_model.hfm";
    m.save(path.string());
    CHECK(HandModel::load(path.string()) == m);
    std::filesystem::remove(path);
    std::vector<char> bad = m.serialize();
    bad.resize(bad.size() / 2);
    CHECK_THROWS(HandModel::deserialize(bad));

    HandMesh tri;
    tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    tri.faces = std::make_shared<const std::vector<Face>>(std::vector<Face>{{0, 1, 2}});
    CHECK(obj_string(tri) == "v 0.000000 0.000000 0.000000\nv 1.000000 0.000000 0.000000\n"
                             "v 0.000000 1.000000 0.000000\nf 1 2 3\n");

    const HandMesh rest = posed_mesh(m, HandShape::zero(), identity_pose());
    const std::string text = obj_string(rest);
    int v_lines = 0;
    for (std::size_t i = 0; i < text.size(); ++i)
        if ((i == 0 || text[i - 1] == '\n') && text.compare(i, 2, "v ") == 0) ++v_lines;
    CHECK(v_lines == m.vertex_count());
    const HandMesh back = parse_obj(text);
    REQUIRE(back.vertices.size() == rest.vertices.size());
    for (std::size_t i = 0; i < back.vertices.size(); ++i) CHECK((back.vertices[i] - rest.vertices[i]).norm() < 1e-6);
    CHECK(back.faces->size() == m.faces().size());
}
