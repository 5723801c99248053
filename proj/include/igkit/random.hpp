#pragma once

// Deterministic random streams with a bit-exact cross-platform contract.
//
// The standard <random> engines are portable but the distributions are not
// (implementations may consume engine output differently), so every transform
// here is spelled out:
//
//  * engine: xoshiro256++ (Blackman & Vigna), state seeded by iterating
//    splitmix64 from a 64-bit seed;
//  * stream splitting: stream k of seed s starts splitmix64 at
//    s XOR (golden-ratio constant * (k + 1)), so distinct (seed, stream)
//    pairs give independent, reproducible sequences;
//  * uniform doubles take the top 53 bits of one engine output;
//  * normals use the cosine Box-Muller branch and consume exactly two
//    uniforms per draw.

#include <cstdint>
#include <cmath>

namespace igkit {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t sm = seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
        for (auto& word : state_) word = splitmix64_next(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53 random bits of mantissa.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]; never zero, safe under log.
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller (cosine branch only, two uniforms).
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi() * u2);
    }

    double normal(double mean, double stddev) {
        return mean + stddev * normal();
    }

  private:
    static constexpr double two_pi() { return 6.283185307179586476925286766559; }

    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

} // namespace igkit
