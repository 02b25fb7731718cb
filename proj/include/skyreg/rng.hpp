#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace skyreg {

// Draw helpers on top of std::mt19937_64. The generator's output sequence is
// fixed by the standard; the transforms below are spelled out so seeded
// streams stay reproducible across standard libraries.

/// Uniform double in [0, 1).
inline double uniform_unit(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(gen);
}

/// Standard normal via Box-Muller. Consumes exactly two draws per call.
inline double gaussian(std::mt19937_64& gen) {
    double u1 = uniform_unit(gen);
    const double u2 = uniform_unit(gen);
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// splitmix64 mix of a base seed and a stream index, for derived sub-streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace skyreg
