#pragma once

#include <cmath>
#include <cstdint>

namespace palsim {

// Counter-based randomness: every draw is a pure function of a 64-bit key
// chain, so results do not depend on evaluation order or thread count.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_key(uint64_t seed, uint64_t a) {
    return splitmix64(seed ^ (a * 0xd6e8feb86659fd93ULL + 0x2545f4914f6cdd1dULL));
}

inline uint64_t mix_key(uint64_t seed, uint64_t a, uint64_t b) {
    return mix_key(mix_key(seed, a), b);
}

inline uint64_t mix_key(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    return mix_key(mix_key(seed, a, b), c);
}

inline uint64_t mix_key(uint64_t seed, uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    return mix_key(mix_key(seed, a, b, c), d);
}

// Uniform in [0, 1), 53-bit mantissa.
inline double uniform01(uint64_t key) {
    return static_cast<double>(key >> 11) * 0x1.0p-53;
}

// Uniform in [-half_range, +half_range].
inline double uniform_signed(uint64_t key, double half_range) {
    return (2.0 * uniform01(key) - 1.0) * half_range;
}

// Standard normal via Box-Muller on two decorrelated streams of one key.
inline double standard_normal(uint64_t key) {
    double u1 = uniform01(splitmix64(key));
    double u2 = uniform01(splitmix64(key ^ 0x6a09e667f3bcc909ULL));
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Truncated normal on [-2, 2] sigma, used for weight init. Rejection with a
// bounded, keyed attempt counter keeps it order independent.
inline double truncated_normal(uint64_t key, double stddev) {
    for (uint64_t attempt = 0; attempt < 16; ++attempt) {
        double z = standard_normal(mix_key(key, attempt));
        if (z >= -2.0 && z <= 2.0) return z * stddev;
    }
    return 0.0;
}

} // namespace palsim
