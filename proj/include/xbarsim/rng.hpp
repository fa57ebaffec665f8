#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace xbarsim {

/// SplitMix64 finalizer. Used both as a seed mixer and as the output
/// function of the counter-based generator below.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derive an independent stream key from a master seed and a path of
/// stream identifiers (layer id, array, tile, cell, purpose, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t key = splitmix64(seed);
    for (std::uint64_t id : path) {
        key = splitmix64(key ^ splitmix64(id + 0x632BE59BD9B4E019ULL));
    }
    return key;
}

/// Counter-based generator: the n-th draw is a pure function of (key, n),
/// so results never depend on which thread consumes which stream.
/// Distributions are implemented here rather than taken from <random> so
/// that streams are identical across standard library implementations.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    constexpr std::uint64_t next_u64() noexcept {
        return splitmix64(key_ + 0xD1B54A32D192ED03ULL * ++counter_);
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one value per call, the pair's
    /// second half is discarded to keep draws counter-addressable).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace xbarsim
