#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, counter), so trials can run in any order or in parallel
// and still reproduce bit for bit.

#include <cstdint>

namespace remag {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// 64 random bits for (seed, stream, counter). Two rounds of the
/// splitmix64 finaliser over a keyed combination of the three words.
constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
{
    const std::uint64_t key = detail::splitmix64(seed ^ detail::splitmix64(stream * 0xD1B54A32D192ED03ULL));
    return detail::splitmix64(key ^ detail::splitmix64(counter + 0x632BE59BD9B4E019ULL));
}

/// Uniform double in the open interval (0, 1), 53-bit resolution.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
{
    return (static_cast<double>(counter_bits(seed, stream, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Inverse of the standard normal CDF (Wichura, AS 241 PPND16), relative
/// accuracy about 1e-16 over (0, 1).
double normal_quantile(double p);

inline double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
{
    return normal_quantile(counter_uniform(seed, stream, counter));
}

} // namespace remag
