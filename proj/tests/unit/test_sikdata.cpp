#include "handik/binary_io.hpp"
#include "handik/parallel.hpp"
#include "handik/sikdata.hpp"

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

SamplerConfig cfg(std::uint64_t hands, std::uint64_t views, std::uint64_t seed = 3) {
    SamplerConfig c = SamplerConfig::defaults();
    c.n_hands = hands;
    c.views_per_hand = views;
    c.seed = seed;
    return c;
}

std::string tmp(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST_CASE("config defaults and validation") {
    const SamplerConfig d = SamplerConfig::defaults();
    CHECK(d.total_samples() == 20000);
    CHECK(SamplerConfig::paper_scale().total_samples() == 1000000);
    for (int a = 0; a < kNumArticulated; ++a) {
        CHECK(d.mu_pose[a].norm() == 0.0);
        CHECK(d.sigma_pose[a] == Vec3(0.5, 0.25, 0.25));
    }
    CHECK(SamplerConfig().mu_pose[5].norm() == 0.0);
    SamplerConfig bad = d;
    bad.n_hands = 0;
    CHECK_THROWS_AS(bad.validate(), DatasetError);
    bad = d;
    bad.sigma_shape[2] = -0.1;
    CHECK_THROWS_AS(bad.validate(), DatasetError);

    const SamplerConfig j = SamplerConfig::from_json({{"n_hands", 12}, {"sigma_pose", 0.1}, {"sigma_shape", 0.0}});
    CHECK(j.n_hands == 12);
    CHECK(j.views_per_hand == 50);
    CHECK(j.sigma_pose[7] == Vec3(0.1, 0.1, 0.1));
    const SamplerConfig k = SamplerConfig::from_json({{"mu_pose", {0.1, 0.2, 0.3}}});
    CHECK(k.mu_pose[15] == Vec3(0.1, 0.2, 0.3));
    const SamplerConfig back = SamplerConfig::from_json(d.to_json());
    CHECK(back.sigma_pose == d.sigma_pose);
    CHECK(back.seed == d.seed);
    CHECK_THROWS_AS(SamplerConfig::from_json({{"sigma_pose", {1, 2}}}), DatasetError);
}

TEST_CASE("noise frames are orthonormal and follow the bones") {
    const auto frames = joint_noise_frames(model());
    const Offsets off = model().skeleton().rest_offsets();
    for (int a = 0; a < kNumArticulated; ++a) {
        CHECK((frames[a].transpose() * frames[a] - Mat3::Identity()).norm() < 1e-12);
        CHECK(frames[a].determinant() == doctest::Approx(1.0));
        const int j = KinematicTree::joint_of_pose_index(a);
        if (j != 0) CHECK((frames[a].col(2) - off[j + 1].normalized()).norm() < 1e-12);
    }
}

TEST_CASE("samples are self-consistent") {
    const SamplerConfig c = cfg(20, 10);
    const auto data = sample_dataset(c, model());
    REQUIRE(data.size() == 200);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const SikSample& s = data[i];
        const Offsets off = offsets_from_joints(model().shaped_joints(HandShape{s.beta_star}));
        const NormalizedPose n = normalize_joints(forward_kinematics(s.q_star(), off).joints);
        for (int j = 0; j < kNumJoints; ++j) {
            CHECK((n.xbar[j] - s.xbar[j]).norm() < 1e-9);
            CHECK((n.kbar[j] - s.kbar[j]).norm() < 1e-9);
        }
        CHECK(s.xbar[0].norm() == 0.0);
        CHECK(s.kbar[0].norm() == 0.0);
        CHECK(std::abs(s.xbar[kReferenceJoint].norm() - 1.0) < 1e-9);
        const BoneLengths l = bone_lengths(s.xbar);
        for (int b = 0; b < kNumBones; ++b) CHECK(std::abs(l[b] - s.lbar_star[b]) < 1e-6);
        for (const Quat& q : s.q_star()) {
            CHECK(q.w >= 0.0);
            CHECK(std::abs(q.norm() - 1.0) < 1e-12);
        }
        // every view of a hand shares shape and lengths
        const SikSample& first = data[i - i % 10];
        CHECK(first.beta_star == s.beta_star);
        for (int b = 0; b < kNumBones; ++b) CHECK(std::abs(first.lbar_star[b] - s.lbar_star[b]) < 1e-12);
    }
}

TEST_CASE("zero spread gives the mean hand in different orientations") {
    SamplerConfig c = cfg(3, 4);
    for (auto& s : c.sigma_pose) s.setZero();
    c.sigma_shape.fill(0.0);
    const auto data = sample_dataset(c, model());
    const Offsets rest = model().skeleton().rest_offsets();
    for (const SikSample& s : data) {
        for (double b : s.beta_star) CHECK(b == 0.0);
        for (int a = 1; a < kNumArticulated; ++a) CHECK(std::abs(std::abs(s.q_star()[a].w) - 1.0) < 1e-12);
        // identical up to a rotation: corresponding pairwise distances agree
        const NormalizedPose ref = normalize_joints(forward_kinematics(identity_pose(), rest).joints);
        for (int j = 0; j < kNumJoints; ++j) CHECK(std::abs(s.xbar[j].norm() - ref.xbar[j].norm()) < 1e-9);
    }
    CHECK_FALSE(data[0].xbar == data[1].xbar);
}

TEST_CASE("sampling is deterministic and thread independent") {
    const SamplerConfig c = cfg(12, 3, 9);
    set_thread_count(1);
    const auto a = dataset_bytes(sample_dataset(c, model()), 3);
    set_thread_count(4);
    const auto b = dataset_bytes(sample_dataset(c, model()), 3);
    set_thread_count(0);
    CHECK(a == b);
    CHECK(dataset_bytes(sample_dataset(cfg(12, 3, 10), model()), 3) != a);
    // a hand's draw does not depend on how many hands are requested
    const auto small = sample_dataset(cfg(2, 3, 9), model());
    const auto big = sample_dataset(c, model());
    CHECK(small[4].xbar == big[4].xbar);
}

TEST_CASE("uniform view rotations") {
    std::mt19937_64 rng(71);
    Vec3 mean_axis = Vec3::Zero();
    double mean_abs_w = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const Quat q = random_rotation(rng);
        mean_axis += quat_rotate(q, Vec3::UnitZ());
        mean_abs_w += std::abs(q.w);
    }
    CHECK((mean_axis / n).norm() < 0.03);
    // E|w| for a uniform point on S^3 is 4 / (3 pi)
    CHECK(mean_abs_w / n == doctest::Approx(4.0 / (3.0 * M_PI)).epsilon(0.02));
}

TEST_CASE("split by hand") {
    const DatasetSplit s = split(500, 50, 0.8, 4);
    CHECK(s.train.size() == 400);
    CHECK(s.test.size() == 100);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (std::size_t i : s.test) CHECK(all.insert(i).second);
    CHECK(all.size() == 500);
    std::set<std::size_t> train_hands, test_hands;
    for (std::size_t i : s.train) train_hands.insert(i / 50);
    for (std::size_t i : s.test) test_hands.insert(i / 50);
    CHECK(train_hands.size() == 8);
    CHECK(test_hands.size() == 2);
    for (std::size_t h : test_hands) CHECK(train_hands.count(h) == 0);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    CHECK(split(500, 50, 0.8, 4).test == s.test);

    const DatasetSplit desk = split(20000, 50, 0.8, 1);
    CHECK(desk.train.size() == 16000);
    CHECK_THROWS_AS(split(10, 3, 0.8, 1), DatasetError);
    CHECK_THROWS_AS(split(10, 5, 1.0, 1), DatasetError);
}

TEST_CASE("SIK1 container") {
    CHECK(kSikRecordBytes == 880);
    const auto data = sample_dataset(cfg(25, 4), model());
    const auto path = tmp("handik_unit.sik1");
    write_dataset(data, 4, path);
    CHECK(std::filesystem::file_size(path) == kSikHeaderBytes + 100 * 880);
    const SikDataset back = read_dataset(path);
    CHECK(back.views_per_hand == 4);
    REQUIRE(back.samples.size() == 100);
    for (std::size_t i = 0; i < 100; ++i) {
        for (int j = 0; j < kNumJoints; ++j) CHECK((back.samples[i].xbar[j] - data[i].xbar[j]).norm() < 1e-6);
        for (int a = 0; a < kNumArticulated; ++a)
            CHECK(std::abs(back.samples[i].q_star()[a].dot(data[i].q_star()[a]) - 1.0) < 1e-6);
        for (int k = 0; k < kNumShape; ++k) CHECK(std::abs(back.samples[i].beta_star[k] - data[i].beta_star[k]) < 1e-6);
    }

    {
        SikWriter w(tmp("handik_unit_stream.sik1"), 4);
        for (const SikSample& s : data) w.write(s);
        w.close();
        CHECK(w.count() == 100);
    }
    CHECK(binio::read_file(tmp("handik_unit_stream.sik1")) == binio::read_file(path));
    std::filesystem::remove(tmp("handik_unit_stream.sik1"));

    std::vector<char> bytes = binio::read_file(path);
    std::vector<char> cut(bytes.begin(), bytes.end() - 100);
    try {
        parse_dataset(cut);
        FAIL("truncated file accepted");
    } catch (const binio::FormatError& e) {
        CHECK(std::string(e.what()).find("record 99") != std::string::npos);
        CHECK(e.offset() == kSikHeaderBytes + 99 * 880);
    }
    std::vector<char> magic = bytes;
    magic[1] = 'X';
    CHECK_THROWS_AS(parse_dataset(magic), binio::FormatError);
    std::vector<char> version = bytes;
    version[4] = 9;
    CHECK_THROWS_AS(parse_dataset(version), binio::FormatError);
    std::vector<char> extra = bytes;
    extra.push_back(0);
    CHECK_THROWS_AS(parse_dataset(extra), binio::FormatError);
    CHECK_THROWS(read_dataset(tmp("handik_missing.sik1")));
    std::filesystem::remove(path);
}
