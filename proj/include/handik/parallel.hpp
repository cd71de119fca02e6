#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace handik {

/// Worker count used by parallel stages; 0 selects hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n). Work items are independent and each writes
/// only its own output slot, so results never depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Derives an independent 64-bit seed for a named substream and index
/// (splitmix64 finalizer over the mixed inputs).
std::uint64_t substream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);
std::mt19937_64 substream(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

}  // namespace handik
