#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "moca/tensor.hpp"

namespace moca {

/// Seeded Gaussian/uniform stream.
///
/// The engine is std::mt19937_64 (bit-exact across standard libraries). Uniforms take the top
/// 53 bits of one engine output; Gaussians use the basic Box-Muller transform, consuming two
/// uniforms per pair and caching the second value. std::normal_distribution is avoided since
/// its algorithm is implementation-defined.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Independent child stream; the child seed is a hash of (seed, index).
    RandomSource split(std::uint64_t index) const { return RandomSource(mix(seed_, index)); }

    /// Uniform in [0, 1).
    double uniform() {
        ++uniform_draws_;
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double gaussian() {
        ++gaussian_draws_;
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    LatentFrame gaussian_frame(const Shape& shape) {
        LatentFrame out(shape);
        for (auto& v : out.values()) v = gaussian();
        return out;
    }

    /// Number of Gaussian values handed out so far.
    std::uint64_t gaussian_draws() const { return gaussian_draws_; }
    std::uint64_t uniform_draws() const { return uniform_draws_; }

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
        // splitmix64 finalizer over a combined word
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
    std::uint64_t gaussian_draws_ = 0;
    std::uint64_t uniform_draws_ = 0;
};

}  // namespace moca
