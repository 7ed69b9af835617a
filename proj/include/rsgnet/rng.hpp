#pragma once

#include <cstdint>
#include <random>

namespace rsgnet {

/// All randomness flows through explicitly seeded engines; there is no
/// hidden global state anywhere in the library.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to spread seeds for independent streams.
inline std::uint64_t split_mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for substream `stream` of a master seed. Parallel runs/trajectories
/// each get one of these, so results are independent of scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return split_mix64(master ^ split_mix64(stream + 1));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform_range(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_index(Rng& rng, int count) {
    return std::uniform_int_distribution<int>(0, count - 1)(rng);
}

}  // namespace rsgnet
