#include "handik/sikdata.hpp"

#include "handik/binary_io.hpp"
#include "handik/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace handik {

namespace {

constexpr char kSikMagic[] = "SIK1";

template <std::size_t N>
void read_vec_array(const nlohmann::json& j, const char* key, std::array<Vec3, N>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_number()) {
        for (auto& x : out) x.setConstant(v.get<double>());
    } else if (v.is_array() && v.size() == 3 && v[0].is_number()) {
        for (auto& x : out) x = Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    } else if (v.is_array() && v.size() == N) {
        for (std::size_t i = 0; i < N; ++i) {
            if (!v[i].is_array() || v[i].size() != 3) throw DatasetError(std::string(key) + ": expected 3-vectors");
            out[i] = Vec3(v[i][0].get<double>(), v[i][1].get<double>(), v[i][2].get<double>());
        }
    } else {
        throw DatasetError(std::string(key) + ": expected a scalar, a 3-vector or " + std::to_string(N) + " 3-vectors");
    }
}

template <std::size_t N>
void read_scalar_array(const nlohmann::json& j, const char* key, std::array<double, N>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_number()) {
        out.fill(v.get<double>());
    } else if (v.is_array() && v.size() == N) {
        for (std::size_t i = 0; i < N; ++i) out[i] = v[i].get<double>();
    } else {
        throw DatasetError(std::string(key) + ": expected a scalar or " + std::to_string(N) + " values");
    }
}

void encode_record(binio::Writer& w, const SikSample& s) {
    for (const Vec3& p : s.xbar)
        for (int c = 0; c < 3; ++c) w.f32(static_cast<float>(p[c]));
    for (const Vec3& p : s.kbar)
        for (int c = 0; c < 3; ++c) w.f32(static_cast<float>(p[c]));
    for (const Quat& q : s.q_star()) {
        w.f32(static_cast<float>(q.w));
        w.f32(static_cast<float>(q.x));
        w.f32(static_cast<float>(q.y));
        w.f32(static_cast<float>(q.z));
    }
    for (double b : s.beta_star) w.f32(static_cast<float>(b));
    for (double l : s.lbar_star) w.f32(static_cast<float>(l));
}

void encode_header(binio::Writer& w, std::uint64_t count, std::uint32_t views) {
    w.magic(std::string_view(kSikMagic, 4));
    w.u32(kSikVersion);
    w.u64(count);
    w.u32(views);
    w.u32(kSikRecordBytes);
}

SikSample decode_record(binio::Reader& r) {
    SikSample s;
    for (Vec3& p : s.xbar)
        for (int c = 0; c < 3; ++c) p[c] = r.f32();
    for (Vec3& p : s.kbar)
        for (int c = 0; c < 3; ++c) p[c] = r.f32();
    Pose q;
    for (Quat& e : q) {
        e.w = r.f32();
        e.x = r.f32();
        e.y = r.f32();
        e.z = r.f32();
    }
    s.set_q_star(q);
    for (double& b : s.beta_star) b = r.f32();
    for (double& l : s.lbar_star) l = r.f32();
    return s;
}

}  // namespace

SamplerConfig SamplerConfig::defaults() {
    SamplerConfig c;
    for (auto& s : c.sigma_pose) s = Vec3(0.5, 0.25, 0.25);
    c.sigma_shape.fill(0.5);
    return c;
}

SamplerConfig SamplerConfig::paper_scale() {
    SamplerConfig c = defaults();
    c.n_hands = 20000;
    c.views_per_hand = 50;
    return c;
}

void SamplerConfig::validate() const {
    if (n_hands < 1) throw DatasetError("n_hands must be >= 1");
    if (views_per_hand < 1) throw DatasetError("views_per_hand must be >= 1");
    if (views_per_hand > 0xffffffffull) throw DatasetError("views_per_hand does not fit the file header");
    if (max_retries < 0) throw DatasetError("max_retries must be >= 0");
    for (const Vec3& s : sigma_pose) {
        if (!(s.minCoeff() >= 0.0) || !s.allFinite()) throw DatasetError("pose sigmas must be finite and >= 0");
    }
    for (const Vec3& m : mu_pose) {
        if (!m.allFinite()) throw DatasetError("pose means must be finite");
    }
    for (int i = 0; i < kNumShape; ++i) {
        if (!(sigma_shape[i] >= 0.0) || !std::isfinite(sigma_shape[i])) {
            throw DatasetError("shape sigmas must be finite and >= 0");
        }
        if (!std::isfinite(mu_shape[i])) throw DatasetError("shape means must be finite");
    }
}

nlohmann::json SamplerConfig::to_json() const {
    auto vecs = [](const std::array<Vec3, kNumArticulated>& a) {
        nlohmann::json out = nlohmann::json::array();
        for (const Vec3& v : a) out.push_back({v.x(), v.y(), v.z()});
        return out;
    };
    return {{"n_hands", n_hands},         {"views_per_hand", views_per_hand}, {"mu_pose", vecs(mu_pose)},
            {"sigma_pose", vecs(sigma_pose)}, {"mu_shape", mu_shape},           {"sigma_shape", sigma_shape},
            {"seed", seed},               {"max_retries", max_retries}};
}

SamplerConfig SamplerConfig::from_json(const nlohmann::json& j, const SamplerConfig& base) {
    if (!j.is_object()) throw DatasetError("sampler config must be a JSON object");
    SamplerConfig c = base;
    try {
        if (j.contains("n_hands")) c.n_hands = j.at("n_hands").get<std::uint64_t>();
        if (j.contains("views_per_hand")) c.views_per_hand = j.at("views_per_hand").get<std::uint64_t>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
        read_vec_array(j, "mu_pose", c.mu_pose);
        read_vec_array(j, "sigma_pose", c.sigma_pose);
        read_scalar_array(j, "mu_shape", c.mu_shape);
        read_scalar_array(j, "sigma_shape", c.sigma_shape);
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(std::string("sampler config: ") + e.what());
    }
    c.validate();
    return c;
}

std::array<Mat3, kNumArticulated> joint_noise_frames(const HandModel& model) {
    const auto& rest = model.rest_joints();
    const Vec3 palm_normal = Vec3::UnitZ();
    std::array<Mat3, kNumArticulated> frames;
    frames[0] = Mat3::Identity();
    for (int a = 1; a < kNumArticulated; ++a) {
        const int j = KinematicTree::joint_of_pose_index(a);
        const Vec3 twist = (rest[j + 1] - rest[j]).normalized();
        const Vec3 flex = twist.cross(palm_normal).normalized();
        const Vec3 spread = twist.cross(flex);
        frames[a].col(0) = flex;
        frames[a].col(1) = spread;
        frames[a].col(2) = twist;
    }
    return frames;
}

Quat random_rotation(std::mt19937_64& rng) {
    // A normalized isotropic Gaussian 4-vector is uniform on S^3.
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        const Quat q{n(rng), n(rng), n(rng), n(rng)};
        if (q.norm() > 1e-9) return q.normalized();
    }
}

HandDraw sample_hand(const SamplerConfig& cfg, const HandModel& model, std::uint64_t hand) {
    const auto frames = joint_noise_frames(model);
    const double rest_ref = (model.rest_joints()[kReferenceJoint] - model.rest_joints()[kRootJoint]).norm();
    std::mt19937_64 rng = substream(cfg.seed, "hand", hand);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        HandDraw d;
        for (int a = 0; a < kNumArticulated; ++a) {
            Vec3 v;
            for (int c = 0; c < 3; ++c) v[c] = cfg.mu_pose[a][c] + 2.0 * cfg.sigma_pose[a][c] * n(rng);
            d.pose[a] = quat_exp(frames[a] * v);
        }
        for (int i = 0; i < kNumShape; ++i) d.shape.beta[i] = cfg.mu_shape[i] + 2.0 * cfg.sigma_shape[i] * n(rng);

        const auto joints = model.shaped_joints(d.shape);
        const Offsets off = offsets_from_joints(joints);
        bool ok = off[kReferenceJoint].norm() > 1e-3 * rest_ref;
        for (int j = 1; j < kNumJoints && ok; ++j) ok = off[j].allFinite() && off[j].norm() > 1e-6 * rest_ref;
        if (ok) return d;
    }
    throw DatasetError("hand " + std::to_string(hand) + ": degenerate shape after " +
                       std::to_string(cfg.max_retries + 1) + " draws");
}

std::vector<SikSample> sample_hand_views(const SamplerConfig& cfg, const HandModel& model, std::uint64_t hand) {
    const HandDraw d = sample_hand(cfg, model, hand);
    const Offsets off = offsets_from_joints(model.shaped_joints(d.shape));
    std::mt19937_64 rng = substream(cfg.seed, "view", hand);
    std::vector<SikSample> out(cfg.views_per_hand);
    for (auto& s : out) {
        Pose pose = d.pose;
        pose[0] = quat_mul(random_rotation(rng), pose[0]);
        const NormalizedPose np = normalize_joints(forward_kinematics(pose, off).joints);
        s.xbar = np.xbar;
        s.kbar = np.kbar;
        for (Quat& q : pose) q = canonical_sign(q);
        s.set_q_star(pose);
        s.beta_star = d.shape.beta;
        s.lbar_star = bone_lengths(np.xbar);
    }
    return out;
}

std::vector<SikSample> sample_dataset(const SamplerConfig& cfg, const HandModel& model) {
    cfg.validate();
    std::vector<std::vector<SikSample>> per_hand(cfg.n_hands);
    parallel_for(cfg.n_hands, [&](std::size_t h) { per_hand[h] = sample_hand_views(cfg, model, h); });
    std::vector<SikSample> out;
    out.reserve(cfg.total_samples());
    for (auto& hand : per_hand) out.insert(out.end(), hand.begin(), hand.end());
    return out;
}

DatasetSplit split(std::size_t n_samples, std::size_t views_per_hand, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw DatasetError("split ratio must lie in (0, 1)");
    if (views_per_hand == 0 || n_samples % views_per_hand != 0) {
        throw DatasetError("sample count is not a multiple of views_per_hand");
    }
    const std::size_t n_hands = n_samples / views_per_hand;
    std::vector<std::size_t> hands(n_hands);
    std::iota(hands.begin(), hands.end(), 0);
    std::mt19937_64 rng = substream(seed, "split");
    // Fisher-Yates with an explicit draw keeps the order independent of the
    // standard library's shuffle implementation.
    for (std::size_t i = n_hands; i > 1; --i) std::swap(hands[i - 1], hands[rng() % i]);
    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n_hands)));
    std::vector<std::size_t> train_hands(hands.begin(), hands.begin() + n_train);
    std::vector<std::size_t> test_hands(hands.begin() + n_train, hands.end());
    std::sort(train_hands.begin(), train_hands.end());
    std::sort(test_hands.begin(), test_hands.end());
    DatasetSplit s;
    for (std::size_t h : train_hands)
        for (std::size_t v = 0; v < views_per_hand; ++v) s.train.push_back(h * views_per_hand + v);
    for (std::size_t h : test_hands)
        for (std::size_t v = 0; v < views_per_hand; ++v) s.test.push_back(h * views_per_hand + v);
    return s;
}

struct SikWriter::Impl {
    std::string path;
    std::ofstream os;
    std::uint32_t views = 1;
};

SikWriter::SikWriter(const std::string& path, std::uint32_t views_per_hand) : impl_(std::make_unique<Impl>()) {
    impl_->path = path;
    impl_->views = views_per_hand;
    impl_->os.open(path, std::ios::binary | std::ios::trunc);
    if (!impl_->os) throw std::runtime_error("cannot open " + path + " for writing");
    binio::Writer w;
    encode_header(w, 0, views_per_hand);
    impl_->os.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
}

SikWriter::~SikWriter() {
    try {
        close();
    } catch (...) {
    }
}

void SikWriter::write(const SikSample& s) {
    if (!impl_->os.is_open()) throw std::runtime_error("SikWriter: write after close");
    binio::Writer w;
    encode_record(w, s);
    impl_->os.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    ++count_;
}

void SikWriter::close() {
    if (!impl_ || !impl_->os.is_open()) return;
    binio::Writer w;
    encode_header(w, count_, impl_->views);
    impl_->os.seekp(0);
    impl_->os.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    impl_->os.close();
    if (impl_->os.fail()) throw std::runtime_error("failed writing " + impl_->path);
}

std::vector<char> dataset_bytes(const std::vector<SikSample>& samples, std::uint32_t views_per_hand) {
    binio::Writer w;
    encode_header(w, samples.size(), views_per_hand);
    for (const SikSample& s : samples) encode_record(w, s);
    return w.take();
}

SikDataset parse_dataset(const std::vector<char>& bytes) {
    binio::Reader r(std::string_view(bytes.data(), bytes.size()));
    r.expect_magic(std::string_view(kSikMagic, 4));
    const std::uint64_t version_at = r.offset();
    const std::uint32_t version = r.u32();
    if (version != kSikVersion) throw binio::FormatError("unsupported SIK1 version " + std::to_string(version), version_at);
    const std::uint64_t count = r.u64();
    SikDataset ds;
    ds.views_per_hand = r.u32();
    const std::uint64_t rb_at = r.offset();
    const std::uint32_t record_bytes = r.u32();
    if (record_bytes != kSikRecordBytes) {
        throw binio::FormatError("record size " + std::to_string(record_bytes) + " != " +
                                     std::to_string(kSikRecordBytes), rb_at);
    }
    if (ds.views_per_hand == 0) throw binio::FormatError("views_per_hand must be >= 1", rb_at - 4);
    ds.samples.reserve(std::min<std::uint64_t>(count, r.remaining() / kSikRecordBytes + 1));
    for (std::uint64_t i = 0; i < count; ++i) {
        if (r.remaining() < kSikRecordBytes) {
            throw binio::FormatError("truncated record " + std::to_string(i) + " of " + std::to_string(count),
                                     r.offset());
        }
        ds.samples.push_back(decode_record(r));
    }
    if (r.remaining() != 0) throw binio::FormatError("trailing bytes after last record", r.offset());
    return ds;
}

void write_dataset(const std::vector<SikSample>& samples, std::uint32_t views_per_hand, const std::string& path) {
    binio::write_file(path, dataset_bytes(samples, views_per_hand));
}

SikDataset read_dataset(const std::string& path) { return parse_dataset(binio::read_file(path)); }

}  // namespace handik
