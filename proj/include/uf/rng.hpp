#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace uf {

/// splitmix64 finalizer; a strong 64-bit mixing function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept
{
    return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// Uniform double in (0, 1) from 53 random bits; never returns 0.
constexpr double to_unit_open(std::uint64_t bits) noexcept
{
    return (static_cast<double>(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

/// Counter-based noise: the same (seed, stream, index) always yields the same
/// pair of standard normals, independent of evaluation order or thread layout.
struct NormalPair {
    double first;
    double second;
};

inline NormalPair counter_normals(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept
{
    const std::uint64_t key = hash_combine(hash_combine(seed, stream), index);
    const double u1 = to_unit_open(mix64(key));
    const double u2 = to_unit_open(mix64(key ^ 0xd1b54a32d192ed03ULL));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
}

} // namespace uf
