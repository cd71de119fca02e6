#pragma once

#include "handik/handmodel.hpp"
#include "handik/kinematics.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace handik {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-joint axis-angle statistics are expressed in each joint's local
/// (flex, spread, twist) frame at rest.
struct SamplerConfig {
    std::uint64_t n_hands = 400;
    std::uint64_t views_per_hand = 50;
    std::array<Vec3, kNumArticulated> mu_pose{};
    std::array<Vec3, kNumArticulated> sigma_pose{};
    std::array<double, kNumShape> mu_shape{};
    std::array<double, kNumShape> sigma_shape{};
    std::uint64_t seed = 1;
    int max_retries = 16;

    /// Rest-pose mean, 0.25 rad per axis (flexion 0.5), shape sigma 0.5.
    static SamplerConfig defaults();
    static SamplerConfig paper_scale();

    std::uint64_t total_samples() const { return n_hands * views_per_hand; }
    void validate() const;

    nlohmann::json to_json() const;
    /// Missing keys keep their defaults. `sigma_pose` / `mu_pose` accept
    /// either a 16x3 array or a single scalar / 3-vector broadcast to all
    /// joints; likewise `sigma_shape` / `mu_shape`.
    static SamplerConfig from_json(const nlohmann::json& j, const SamplerConfig& base = defaults());
};

/// One location-rotation training pair. Reads of q_star are counted so the
/// training code can prove which modes consume rotation supervision.
struct SikSample {
    std::array<Vec3, kNumJoints> xbar{};
    std::array<Vec3, kNumJoints> kbar{};
    std::array<double, kNumShape> beta_star{};
    BoneLengths lbar_star{};

    const Pose& q_star() const {
        reads_.fetch_add(1, std::memory_order_relaxed);
        return q_star_;
    }
    void set_q_star(const Pose& q) { q_star_ = q; }

    static std::uint64_t q_star_reads() { return reads_.load(); }

private:
    Pose q_star_ = identity_pose();
    inline static std::atomic<std::uint64_t> reads_{0};
};

/// Local rest-frame axes (columns: flex, spread, twist) of each articulated joint.
std::array<Mat3, kNumArticulated> joint_noise_frames(const HandModel& model);

struct HandDraw {
    Pose pose;
    HandShape shape;
};
/// The pose/shape draw for one hand index. Deterministic in (cfg.seed, hand).
HandDraw sample_hand(const SamplerConfig& cfg, const HandModel& model, std::uint64_t hand);
/// All views of one hand, in view order.
std::vector<SikSample> sample_hand_views(const SamplerConfig& cfg, const HandModel& model, std::uint64_t hand);
/// Hand-major, view-minor sample stream of total_samples() entries.
std::vector<SikSample> sample_dataset(const SamplerConfig& cfg, const HandModel& model);

/// Uniformly distributed rotation.
Quat random_rotation(std::mt19937_64& rng);

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
/// Split by hand: all views of a hand land on the same side. The train side
/// gets floor(ratio * n_hands) hands. Indices ascend within each side.
DatasetSplit split(std::size_t n_samples, std::size_t views_per_hand, double ratio, std::uint64_t seed);

inline constexpr std::uint32_t kSikVersion = 1;
inline constexpr std::uint32_t kSikRecordFloats = 63 + 63 + 64 + kNumShape + kNumBones;
inline constexpr std::uint32_t kSikRecordBytes = kSikRecordFloats * 4;
inline constexpr std::size_t kSikHeaderBytes = 4 + 4 + 8 + 4 + 4;

struct SikDataset {
    std::uint32_t views_per_hand = 1;
    std::vector<SikSample> samples;
};

/// Incremental SIK1 writer; the header count is patched on close().
class SikWriter {
public:
    SikWriter(const std::string& path, std::uint32_t views_per_hand);
    ~SikWriter();
    SikWriter(const SikWriter&) = delete;
    SikWriter& operator=(const SikWriter&) = delete;

    void write(const SikSample& s);
    void close();
    std::uint64_t count() const { return count_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint64_t count_ = 0;
};

std::vector<char> dataset_bytes(const std::vector<SikSample>& samples, std::uint32_t views_per_hand);
SikDataset parse_dataset(const std::vector<char>& bytes);
void write_dataset(const std::vector<SikSample>& samples, std::uint32_t views_per_hand, const std::string& path);
SikDataset read_dataset(const std::string& path);

}  // namespace handik
