#pragma once

#include <cstdint>
#include <random>

namespace pathrag {

/// Unbiased draw from [0, n) via rejection; avoids the
/// implementation-defined std::uniform_int_distribution so seeded results
/// are identical on every platform.
inline uint64_t bounded_uniform(std::mt19937_64& rng, uint64_t n) {
    if (n == 0) return 0;
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % n;
}

/// SplitMix64 step, used to derive per-item seeds from a run seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace pathrag
