#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "spikeprune/errors.hpp"

// Seeding and sampling helpers. All mappings from raw 64-bit draws to
// distributions are written out explicitly instead of going through
// std::<distribution> so that results do not depend on the standard
// library implementation.

namespace spikeprune {

using Rng = std::mt19937_64;

// Every stochastic stage derives its generator from the one root seed.
enum class Subsystem : std::uint64_t {
    Data = 1,
    Init = 2,
    Train = 3,
    Lre = 4,
    Agent = 5,
    Search = 6,
    Finalize = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// seed + subsystem index, mixed; `salt` separates per-item streams
// (e.g. one finetune per sampled policy).
inline std::uint64_t derive_seed(std::uint64_t root, Subsystem s, std::uint64_t salt = 0) {
    std::uint64_t base = root + static_cast<std::uint64_t>(s);
    return splitmix64(splitmix64(base) ^ splitmix64(salt + 0x51ed2701ULL));
}

inline Rng subsystem_rng(std::uint64_t root, Subsystem s, std::uint64_t salt = 0) {
    return Rng(derive_seed(root, s, salt));
}

// Uniform double in [0, 1).
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform_range(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Unbiased uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    require(n > 0, "uniform_index: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// Standard normal via Box-Muller. Stateless: consumes two draws per sample.
inline double gaussian(Rng& rng) {
    double u1 = 1.0 - uniform01(rng);  // (0, 1], keeps log finite
    double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Fisher-Yates, explicit so shuffles do not depend on std::shuffle internals.
template <typename T>
void shuffle_vector(Rng& rng, std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle_vector(rng, idx);
    return idx;
}

// Standard normal CDF.
inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace spikeprune
