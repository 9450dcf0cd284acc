#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace segforge {

/// Engine used for every seeded step. mt19937_64's output sequence is fixed by
/// the standard; the helpers below avoid the implementation-defined std
/// distributions so results match across standard libraries.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for item `index` under `seed`.
inline Rng derived_rng(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed ^ splitmix64(index + 1)));
}

/// Uniform integer in [0, bound), bound > 0, by rejection.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % bound;
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

/// Standard normal via Box-Muller.
inline double standard_normal(Rng& rng) {
    double u1 = uniform_unit(rng);
    while (u1 <= 0.0) u1 = uniform_unit(rng);
    const double u2 = uniform_unit(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace segforge
