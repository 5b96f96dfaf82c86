#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "stfluct/error.hpp"

namespace stfluct {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace detail

/// Deterministic random source keyed by (master_seed, stream_index).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Distributions are implemented here rather than taken from
/// <random>, because the std distribution algorithms are implementation
/// defined and would break cross-platform reproducibility.
///
/// One stream is owned by one logical task (a trajectory, a bootstrap run).
/// Ensemble code derives stream_index from the trajectory index, never from
/// the worker that happens to execute it.
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t stream_index)
        : master_seed_(master_seed), stream_index_(stream_index),
          engine_(detail::splitmix64(detail::splitmix64(master_seed) ^
                                     detail::splitmix64(stream_index + 0x632BE59BD9B4E019ull)))
    {
    }

    std::uint64_t master_seed() const noexcept { return master_seed_; }
    std::uint64_t stream_index() const noexcept { return stream_index_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection, n > 0.
    std::uint64_t uniform_index(std::uint64_t n)
    {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t r = engine_();
        while (r >= limit) r = engine_();
        return r % n;
    }

    /// Complex Gaussian with independent real and imaginary parts of
    /// variance variance/2 each (polar Box-Muller on one uniform pair).
    std::complex<double> complex_gaussian(double variance)
    {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-variance * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(theta), r * std::sin(theta)};
    }

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::mt19937_64 engine_;
};

/// E[z] = 0, E[z^2] = 0, E[|z|^2] = variance. variance == 0 returns exactly 0.
inline std::complex<double> draw_complex_gaussian(RandomStream& stream, double variance)
{
    require(variance >= 0.0, ErrorCode::InvalidArgument, "draw_complex_gaussian: variance must be >= 0");
    if (variance == 0.0) return {0.0, 0.0};
    return stream.complex_gaussian(variance);
}

} // namespace stfluct
