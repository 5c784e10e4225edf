#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace bandcov {

// Seedable 64-bit generator: xoshiro256++ 1.0 (Blackman/Vigna reference
// algorithm), state initialized from splitmix64. All sampling below is built
// on the raw bit stream with explicit arithmetic, so a given seed produces
// the same sequence on every platform with IEEE doubles and the same libm.
//
// Stream splitting rule (hierarchical): substream i of seed s is the seed
//   s + (i + 1) * 0x9E3779B97F4A7C15  (mod 2^64).
// An experiment derives per-replication seeds from the master seed with this
// rule; a replication derives per-use-site seeds (data generation, resampling
// splits, ...) from its own seed the same way. Results therefore do not
// depend on scheduling or thread count.
inline constexpr const char* kRngName = "xoshiro256++-1.0/splitmix64";
inline constexpr std::uint64_t kSeedGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
    return seed + (index + 1) * kSeedGamma;
}

inline std::uint64_t splitmix64_next(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64_next(sm);
    }

    static Rng substream(std::uint64_t seed, std::uint64_t index) {
        return Rng(substream_seed(seed, index));
    }

    std::uint64_t next_u64() {
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

    // uniform on [0, 1), 53 random bits
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on (0, 1], used where log() must not see zero
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // unbiased integer in [0, bound) via 128-bit multiply-shift
    std::uint64_t below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    // standard normal, Box-Muller; consumes exactly two uniforms per pair
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // unit exponential
    double exponential() { return -std::log(uniform_pos()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bandcov
