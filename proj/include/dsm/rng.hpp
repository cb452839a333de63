#pragma once

#include "dsm/common.hpp"

#include <cmath>
#include <cstdint>

namespace dsm {

/// Counter-based pseudorandom generator (SplitMix64).
///
/// Output k is mix64(seed + (k+1) * 0x9E3779B97F4A7C15): pure 64-bit integer
/// arithmetic, so sequences are bit-identical across platforms. Independent
/// streams are derived by mixing a stream index into the seed, which gives
/// one self-contained generator per trajectory / batch element with no
/// cross-stream correlation in practice.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derived generator for substream `stream` of `seed`.
    static Rng stream(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix64(seed ^ mix64(stream + 0x9E3779B97F4A7C15ULL)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Inverse-CDF draw from a probability vector.
    int categorical(const Vec& probs) {
        const double u = uniform01();
        double acc = 0.0;
        const int n = static_cast<int>(probs.size());
        for (int i = 0; i < n; ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return n - 1;  // guard against accumulated rounding
    }

    /// Geometric(1 - gamma) on {0, 1, 2, ...}: P(Y = k) = (1 - gamma) gamma^k.
    std::int64_t geometric(double gamma) {
        const double u = uniform01();
        if (u == 0.0) return 0;
        return static_cast<std::int64_t>(std::floor(std::log(u) / std::log(gamma)));
    }

    /// Standard normal via Box-Muller (one value per call, deterministic).
    double normal() {
        double u1 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

  private:
    static std::uint64_t mix64(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace dsm
