#pragma once

#include <cstdint>
#include <random>

namespace momrec {

using Rng = std::mt19937_64;

/// SplitMix64 mix; used to derive well-separated substream seeds from a
/// master seed plus a task index, so parallel work stays reproducible
/// regardless of scheduling.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

inline Rng subtask_rng(std::uint64_t seed, std::uint64_t task) {
    return Rng(mix64(mix64(seed) ^ mix64(task + 0x51b5c1a2e0f3ad11ULL)));
}

inline double normal(Rng& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(rng);
}

inline double uniform(Rng& rng) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    return d(rng);
}

/// Uniform in [lo, hi).
inline double uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

} // namespace momrec
