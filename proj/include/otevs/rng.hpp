#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace otevs {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Independent RNG stream keyed by a master seed and a path of stream ids,
/// e.g. make_stream(seed, {iteration, sample}). The same key always yields
/// the same stream, independent of call order.
inline Rng make_stream(std::uint64_t seed,
                       std::initializer_list<std::uint64_t> path = {}) {
    std::uint64_t h = detail::splitmix64(seed);
    for (auto id : path) {
        h = detail::splitmix64(h ^ detail::splitmix64(id + 0x632be59bd9b4e019ULL));
    }
    std::seed_seq seq{static_cast<std::uint32_t>(h),
                      static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(detail::splitmix64(h)),
                      static_cast<std::uint32_t>(detail::splitmix64(h) >> 32)};
    return Rng(seq);
}

/// Draws a fresh 64-bit seed from an existing generator.
inline std::uint64_t fork_seed(Rng &rng) { return rng(); }

} // namespace otevs
