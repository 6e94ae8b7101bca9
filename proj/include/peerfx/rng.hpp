#pragma once
// Seeded RNG streams. Every stochastic routine takes an explicit stream so
// results are reproducible and independent of thread scheduling.

#include <cstdint>
#include <random>

namespace peerfx {

// splitmix64 finalizer; decorrelates derived seeds.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x6a09e667f3bcc909ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::uint64_t stream = 0) {
    return std::mt19937_64(derive_seed(master, stream));
}

inline double draw_normal(std::mt19937_64& rng, double mean = 0.0, double sd = 1.0) {
    std::normal_distribution<double> d(mean, sd);
    return d(rng);
}

inline double draw_uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

inline int draw_int(std::mt19937_64& rng, int lo, int hi) {  // inclusive bounds
    std::uniform_int_distribution<int> d(lo, hi);
    return d(rng);
}

inline bool draw_bernoulli(std::mt19937_64& rng, double p) {
    return draw_uniform(rng) < p;
}

}  // namespace peerfx
