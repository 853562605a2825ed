#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace conecouple {

/// SplitMix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based seed derivation. The result depends only on the master
/// seed and the key sequence, so streams can be created in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(master + 0x9e3779b97f4a7c15ULL);
    for (std::uint64_t k : keys) {
        h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
    }
    return h;
}

/// Maps a signed coordinate onto the key space of derive_seed.
constexpr std::uint64_t key_of(std::int64_t v) noexcept { return static_cast<std::uint64_t>(v); }

/// SplitMix64 stream. Cheap to construct, which matters because every
/// (site, stream) pair of an event log owns one.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    /// Exponential with the given rate; strictly positive and finite.
    double exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

private:
    std::uint64_t state_;
};

/// Stateless uniform on [0, 1) keyed by (seed, keys...).
constexpr double keyed_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
    return static_cast<double>(derive_seed(seed, keys) >> 11) * 0x1.0p-53;
}

}  // namespace conecouple
