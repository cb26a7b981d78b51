#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace wdro {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based child seed: the same (master, path) always yields the same
/// stream, independent of which worker asks for it or when.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

// Stream tags used with derive_seed so that distinct consumers never share a stream.
namespace stream {
inline constexpr std::uint64_t restart = 1;
inline constexpr std::uint64_t weights = 2;
inline constexpr std::uint64_t train_batch = 3;
inline constexpr std::uint64_t eval_batch = 4;
inline constexpr std::uint64_t target = 5;
inline constexpr std::uint64_t instance = 6;
inline constexpr std::uint64_t noise = 7;
}  // namespace stream

}  // namespace wdro
