#pragma once
#include <array>
#include <cmath>
#include <cstdint>

#include "hte/core/error.hpp"

namespace hte {

namespace detail {

// SplitMix64 (Vigna). Used both for seeding and for deriving substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

// Deterministic stream generator: xoshiro256** with state seeded through
// SplitMix64. Substreams are derived as SplitMix64(base_seed XOR index),
// which is collision-free because SplitMix64 is a bijection on 64-bit words.
// Single-owner by convention: parallel work derives substreams up front and
// never shares a live stream across tasks.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : base_seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }

    std::uint64_t base_seed() const { return base_seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) using the top 53 bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        if (bound == 0) throw NumericError("uniform_below: bound must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % bound;
    }

    // Standard normal via the Marsaglia polar method; one draw is cached.
    double standard_normal() {
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
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * factor;
        have_spare_ = true;
        return u * factor;
    }

    // Equiprobable integer in [0, levels).
    int categorical_equal(int levels) {
        if (levels < 1) throw NumericError("categorical_equal: levels must be >= 1");
        return static_cast<int>(uniform_below(static_cast<std::uint64_t>(levels)));
    }

    RngStream substream(std::uint64_t index) const {
        std::uint64_t sm = base_seed_ ^ index;
        return RngStream(detail::splitmix64(sm));
    }

private:
    std::array<std::uint64_t, 4> state_;
    std::uint64_t base_seed_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace hte
