#pragma once

#include <cstdint>
#include <initializer_list>

namespace mdpricer {

// Counter-based mixing (splitmix64 finalizer). Streams are keyed by whatever
// identifies the draw, so replays and common-random-numbers pairings never
// depend on evaluation order.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t k : keys) h = mix64(h ^ k);
    return h;
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform_from_hash(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double keyed_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    return uniform_from_hash(hash_combine(seed, keys));
}

}  // namespace mdpricer
