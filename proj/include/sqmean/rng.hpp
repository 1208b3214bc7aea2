#pragma once

#include <cstdint>
#include <random>

namespace sqmean {

// All randomness in the library flows through std::mt19937_64 seeded with
// 64-bit values, with uniforms derived explicitly from raw generator output.
// The standard library's distribution objects are implementation-defined and
// would break cross-platform reproducibility, so they are not used.

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Deterministic sub-seed for stream `index` of a base seed. Equivalent to the
// index-th output of a SplitMix64 generator started at `base`.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base + index * 0x9E3779B97F4A7C15ULL);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace sqmean
