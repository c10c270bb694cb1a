#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace flarebench {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based child seed: depends only on the parent and the key path,
// never on how many other children were drawn before.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> keys) noexcept
{
    std::uint64_t s = splitmix64(parent);
    for (std::uint64_t k : keys)
        s = splitmix64(s ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return s;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

} // namespace flarebench
