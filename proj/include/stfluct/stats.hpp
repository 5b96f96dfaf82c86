#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "stfluct/error.hpp"

namespace stfluct {

/// Absolute allowance added to every "within k standard errors" comparison.
/// It only absorbs floating-point round-off when an estimator is exact
/// sample by sample (standard error of order 1e-16).
inline constexpr double kRoundoffFloor = 1e-12;

struct RealEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

struct ComplexEstimate {
    std::complex<double> mean{};
    /// sqrt(E|z - mean|^2 / N): the standard error of a complex mean,
    /// combining real and imaginary parts.
    double standard_error = 0.0;
};

/// Streaming accumulator (Welford) for real samples.
class RealAccumulator {
public:
    void add(double x)
    {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    std::size_t count() const noexcept { return n_; }

    RealEstimate estimate() const
    {
        require(n_ > 0, ErrorCode::InvalidArgument, "RealAccumulator: no samples");
        if (n_ < 2) return {mean_, 0.0};
        const double var = m2_ / static_cast<double>(n_ - 1);
        return {mean_, std::sqrt(var / static_cast<double>(n_))};
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

class ComplexAccumulator {
public:
    void add(std::complex<double> z)
    {
        re_.add(z.real());
        im_.add(z.imag());
    }

    std::size_t count() const noexcept { return re_.count(); }

    ComplexEstimate estimate() const
    {
        const auto r = re_.estimate();
        const auto i = im_.estimate();
        return {{r.mean, i.mean}, std::hypot(r.standard_error, i.standard_error)};
    }

    RealEstimate real_part() const { return re_.estimate(); }
    RealEstimate imag_part() const { return im_.estimate(); }

private:
    RealAccumulator re_;
    RealAccumulator im_;
};

inline bool within_standard_errors(double deviation, double standard_error, double k = 3.0)
{
    return std::abs(deviation) <= k * standard_error + kRoundoffFloor;
}

inline bool within_standard_errors(std::complex<double> deviation, double standard_error, double k = 3.0)
{
    return std::abs(deviation) <= k * standard_error + kRoundoffFloor;
}

} // namespace stfluct
