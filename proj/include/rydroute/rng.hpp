#pragma once

// Counter-based random numbers for reproducible, schedule-independent
// Monte Carlo.
//
// A draw is a pure function of (key, counter): bits = mix64(key ^ mix64(counter)),
// with mix64 the SplitMix64 finalizer. Uniforms take the top 53 bits and are
// shifted into the open interval (0, 1). Gaussian pairs use Box-Muller on the
// uniforms at counters (2c, 2c + 1). Sub-stream keys hash (master seed,
// index, ...).

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <utility>

#include "rydroute/constants.hpp"

namespace rydroute {

constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic sub-seed for a path of indices below `seed`.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t v : path) h = mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
    return h;
}

class CounterRng {
public:
    constexpr explicit CounterRng(std::uint64_t key) : key_(key) {}

    constexpr std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ ^ mix64(counter)); }

    /// Uniform deviate in (0, 1).
    constexpr double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Two independent standard normals from counters 2c and 2c + 1.
    std::pair<double, double> normal_pair(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = constants::two_pi * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

}  // namespace rydroute
