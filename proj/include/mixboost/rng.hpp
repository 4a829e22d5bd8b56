#pragma once

#include <cmath>
#include <cstdint>

namespace mixboost {

/// Deterministic splittable random number generator.
///
/// One root seed spawns independent child streams keyed by (purpose, index),
/// so every consumer draws from its own stream and results do not depend on
/// thread count or evaluation order. The core is splitmix64; all
/// distributions are implemented here rather than via <random> so the byte
/// stream is identical on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed)) {}

    /// Derive the child stream for (purpose, index) under a root seed.
    static Rng child(std::uint64_t root, std::uint64_t purpose, std::uint64_t index = 0) {
        return Rng(mix(mix(root ^ mix(purpose)) ^ mix(index ^ 0x5bf0'3635'dead'4995ULL)));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t threshold = (~bound + 1) % bound; // 2^64 mod bound
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Uniform integer in [lo, hi] inclusive.
    long long uniform_int(long long lo, long long hi) {
        return lo + static_cast<long long>(uniform_below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool coin() { return (next_u64() >> 63) != 0; }

    /// Standard normal via Box-Muller; two uniforms per draw, no cached state.
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

/// Stream purposes for Rng::child. Fixed numbering is part of the
/// reproducibility contract: changing it changes every seeded result.
namespace rng_purpose {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kSubclass = 2;
inline constexpr std::uint64_t kRowSample = 3;
inline constexpr std::uint64_t kColSample = 4;
inline constexpr std::uint64_t kProjection = 5;
inline constexpr std::uint64_t kSynth = 6;
inline constexpr std::uint64_t kConfigSample = 7;
inline constexpr std::uint64_t kResourceSubset = 8;
inline constexpr std::uint64_t kTheoryTrial = 9;
} // namespace rng_purpose

} // namespace mixboost
