#pragma once

#include <cstdint>

#include "qsv/errors.hpp"

#include <cmath>

namespace qsv {

/// Finalizer of the splitmix64 generator. Used both as the generator's
/// output stage and as the mixing function that derives replication and
/// substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

/// splitmix64: a tiny, fast, well-distributed 64-bit generator. One instance
/// per independent stream; streams are never shared across replications, so
/// results do not depend on scheduling.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1): rejects exact zeros so logs stay finite.
    double uniform_positive() {
        double u = uniform();
        while (u == 0.0) u = uniform();
        return u;
    }

private:
    std::uint64_t state_;
};

/// Seed of the rng stream for one replication of a seeded experiment.
/// Replications advance along the splitmix increment rather than xor-ing the
/// index in: with xor, nearby experiment seeds enumerate the same *set* of
/// stream seeds in a different order, so whole campaigns become permutations
/// of each other. The golden-ratio step keeps the streams of distinct seeds
/// disjoint over any practical replication range.
constexpr std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t replication) {
    return mix64(seed + 0x9E3779B97F4A7C15ULL * replication);
}

/// Seed of a tagged substream (stratum, performance measure, ...) inside one
/// replication.
constexpr std::uint64_t substream_seed(std::uint64_t base, std::uint64_t tag,
                                       std::uint64_t index) {
    return mix64(base ^ mix64(tag + index));
}

/// Strictly positive exponential inter-event gap with the given rate per km.
inline double exponential_gap(SplitMix64& rng, double rate_per_km) {
    if (!(rate_per_km > 0.0)) throw validation_error("exponential_gap: rate must be positive");
    return -std::log(rng.uniform_positive()) / rate_per_km;
}

/// Standard normal deviate (Box-Muller, cosine branch).
inline double standard_normal(SplitMix64& rng) {
    const double u1 = rng.uniform_positive();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Draw from the generalized Pareto distribution with shape xi and scale
/// sigma by inverting the survival function.
inline double generalized_pareto(SplitMix64& rng, double xi, double sigma) {
    const double u = rng.uniform_positive(); // survival probability
    if (xi == 0.0) return -sigma * std::log(u);
    return sigma * std::expm1(-xi * std::log(u)) / xi;
}

} // namespace qsv
