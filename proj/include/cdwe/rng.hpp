#pragma once

#include <cstdint>
#include <random>

namespace cdwe {

// std::uniform_int_distribution is not bit-identical across standard library
// implementations, so seeded sampling goes through these helpers instead.

// Uniform integer in [0, n) by rejection sampling.
inline uint64_t bounded_rand(std::mt19937_64& rng, uint64_t n) {
    uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
        uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

// Uniform double in [0, 1) with 53 bits of randomness.
inline double unit_rand(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cdwe
