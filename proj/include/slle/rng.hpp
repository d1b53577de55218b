#pragma once

// Deterministic random number generation. Everything here is hand-rolled on
// purpose: std::normal_distribution is not bit-reproducible across standard
// library implementations, and golden-value tests plus seeded re-runs require
// identical streams on every platform. Core generator is xoshiro256++
// (Blackman & Vigna), seeded and forked through splitmix64 steps.

#include <cmath>
#include <cstdint>

namespace slle {

/// One splitmix64 step: advances `state` and returns the next output word.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from a parent seed and two index words.
/// This is the published derivation rule used everywhere a run forks streams:
/// bridge refinement uses (path seed, level, increment index), ensemble runs
/// use (base seed, replica index, purpose tag). Three chained splitmix64
/// steps, each absorbing one word.
inline std::uint64_t derive_seed(std::uint64_t parent,
                                 std::uint64_t word0,
                                 std::uint64_t word1 = 0) noexcept {
    std::uint64_t s = parent;
    std::uint64_t h = splitmix64(s);
    s ^= word0;
    h ^= splitmix64(s);
    s ^= word1;
    return h ^ splitmix64(s);
}

/// xoshiro256++ stream with uniform and Gaussian draws.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) noexcept {
        for (auto& word : s_) word = splitmix64(seed);
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in the open interval (0,1); 53-bit resolution, never 0.
    double uniform() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via the Marsaglia polar method (exact, no tables).
    /// Pairs are generated together and the second value is cached.
    double gauss() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        have_spare_ = true;
        return u * scale;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace slle
