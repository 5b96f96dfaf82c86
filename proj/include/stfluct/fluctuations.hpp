#pragma once

// Commuting (complex scalar) and Pauli (iso-space matrix) fluctuation
// increments, their moments, and the exchange constant eta.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stfluct/core.hpp"
#include "stfluct/error.hpp"
#include "stfluct/random.hpp"
#include "stfluct/stats.hpp"

namespace stfluct {

enum class FluctuationKind { Commuting, Pauli };

inline std::string_view to_string(FluctuationKind k) { return k == FluctuationKind::Pauli ? "pauli" : "commuting"; }

inline FluctuationKind parse_fluctuation_kind(std::string_view s)
{
    if (s == "pauli") return FluctuationKind::Pauli;
    if (s == "commuting") return FluctuationKind::Commuting;
    throw Error(ErrorCode::InvalidArgument, "unknown fluctuation kind '" + std::string(s) + "'");
}

using Matrix2 = Eigen::Matrix2cd;

inline const std::array<Matrix2, 3>& pauli2()
{
    static const std::array<Matrix2, 3> s = [] {
        std::array<Matrix2, 3> out;
        for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(i)] = pauli(i + 1).matrix();
        return out;
    }();
    return s;
}

/// (1/sqrt 3) * sum_i c_i sigma_i as a fixed-size 2x2 matrix.
inline Matrix2 iso_matrix(const std::array<Complex, 3>& c)
{
    const double s = 1.0 / std::sqrt(3.0);
    Matrix2 m;
    m(0, 0) = s * c[2];
    m(1, 1) = -s * c[2];
    m(0, 1) = s * (c[0] - kI * c[1]);
    m(1, 0) = s * (c[0] + kI * c[1]);
    return m;
}

struct ScalarIncrement {
    Complex value{};
};

/// One Pauli fluctuation: three independent complex components. The matrix
/// form is always derived from the components, never stored separately.
struct IsoIncrement {
    std::array<Complex, 3> components{};

    ComplexOperator matrix() const { return ComplexOperator(Matrix(iso_matrix(components))); }
};

inline ScalarIncrement sample_scalar(RandomStream& stream, double dt)
{
    require(dt > 0.0, ErrorCode::InvalidArgument, "sample_scalar: dt must be positive");
    return {stream.complex_gaussian(dt)};
}

inline IsoIncrement sample_pauli(RandomStream& stream, double dt)
{
    require(dt > 0.0, ErrorCode::InvalidArgument, "sample_pauli: dt must be positive");
    IsoIncrement inc;
    for (auto& c : inc.components) c = stream.complex_gaussian(dt);
    return inc;
}

enum class EtaMethod { Algebraic, MonteCarlo };

struct EtaResult {
    double eta = 0.0;
    double standard_error = 0.0;
    EtaMethod method = EtaMethod::Algebraic;
};

/// sum over i, i' of sigma_i' sigma_i sigma_i' sigma_i, by explicit products.
inline ComplexOperator pauli_exchange_sum()
{
    ComplexOperator sum = ComplexOperator::zero(2);
    for (int ip = 1; ip <= 3; ++ip)
        for (int i = 1; i <= 3; ++i) sum = sum + pauli(ip) * pauli(i) * pauli(ip) * pauli(i);
    return sum;
}

/// Exchange constant from the Pauli algebra. The mean matrix must reduce to
/// a multiple of the identity; anything else is an internal error.
inline EtaResult exchange_mean_algebraic(FluctuationKind kind)
{
    if (kind == FluctuationKind::Commuting) return {1.0, 0.0, EtaMethod::Algebraic};

    const ComplexOperator mean = pauli_exchange_sum() * Complex(1.0 / 9.0);
    const Complex coeff = mean.trace() / 2.0;
    const double residue = mean.max_abs_diff(ComplexOperator::identity(2) * coeff);
    require(residue <= 1e-12 && std::abs(coeff.imag()) <= 1e-12, ErrorCode::InternalConsistency,
            "exchange_mean_algebraic: mean is not proportional to the identity");
    return {coeff.real(), 0.0, EtaMethod::Algebraic};
}

namespace detail {

enum class Pairing { Direct, Exchange };

/// Identity coefficient of one fourth-order product at two distinct times,
/// divided by dt^2.
///   Direct:   xi(t') xi(t) xi^dag(t)  xi^dag(t')
///   Exchange: xi(t') xi(t) xi^dag(t') xi^dag(t)
inline Complex fourth_order_sample(FluctuationKind kind, Pairing pairing, RandomStream& stream, double dt)
{
    if (kind == FluctuationKind::Commuting) {
        const Complex a = stream.complex_gaussian(dt);
        const Complex b = stream.complex_gaussian(dt);
        return b * a * std::conj(b) * std::conj(a) / (dt * dt);
    }
    const Matrix2 a = iso_matrix(sample_pauli(stream, dt).components);
    const Matrix2 b = iso_matrix(sample_pauli(stream, dt).components);
    const Matrix2 p = pairing == Pairing::Exchange ? Matrix2(b * a * b.adjoint() * a.adjoint())
                                                   : Matrix2(b * a * a.adjoint() * b.adjoint());
    return p.trace() / (2.0 * dt * dt);
}

inline EtaResult fourth_order_mc(FluctuationKind kind, Pairing pairing, std::size_t n_samples, double dt,
                                 RandomStream& stream)
{
    require(n_samples >= 100, ErrorCode::InvalidArgument, "fourth-order mean: n_samples must be >= 100");
    require(dt > 0.0, ErrorCode::InvalidArgument, "fourth-order mean: dt must be positive");
    RealAccumulator acc;
    for (std::size_t s = 0; s < n_samples; ++s) acc.add(fourth_order_sample(kind, pairing, stream, dt).real());
    const auto e = acc.estimate();
    return {e.mean, e.standard_error, EtaMethod::MonteCarlo};
}

} // namespace detail

/// Monte Carlo estimate of eta from independent increment pairs.
inline EtaResult exchange_mean_mc(FluctuationKind kind, std::size_t n_samples, double dt, RandomStream& stream)
{
    return detail::fourth_order_mc(kind, detail::Pairing::Exchange, n_samples, dt, stream);
}

/// The direct pairing; 1 for either kind.
inline EtaResult direct_mean_mc(FluctuationKind kind, std::size_t n_samples, double dt, RandomStream& stream)
{
    return detail::fourth_order_mc(kind, detail::Pairing::Direct, n_samples, dt, stream);
}

struct MomentCheck {
    std::string name;
    Complex estimate{};
    Complex expected{};
    double standard_error = 0.0;
    bool passed = false;
};

namespace detail {

inline MomentCheck finish_check(std::string name, const ComplexAccumulator& acc, Complex expected)
{
    const auto e = acc.estimate();
    return {std::move(name), e.mean, expected, e.standard_error,
            within_standard_errors(e.mean - expected, e.standard_error)};
}

inline void add_matrix_checks(std::vector<MomentCheck>& out, const std::string& name,
                              const std::array<ComplexAccumulator, 4>& acc, const Matrix2& expected)
{
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            out.push_back(finish_check(name + "(" + std::to_string(r) + "," + std::to_string(c) + ")",
                                       acc[static_cast<std::size_t>(2 * r + c)], expected(r, c)));
}

inline void add_matrix_sample(std::array<ComplexAccumulator, 4>& acc, const Matrix2& m)
{
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) acc[static_cast<std::size_t>(2 * r + c)].add(m(r, c));
}

inline Matrix2 matrix_power(const Matrix2& m, int n)
{
    Matrix2 out = Matrix2::Identity();
    for (int i = 0; i < n; ++i) out = out * m;
    return out;
}

} // namespace detail

/// Unbalanced orders (n, m) of E[xi^n (xi^dag)^m] checked by the suite.
inline constexpr std::array<std::array<int, 2>, 4> kUnbalancedOrders{{{1, 0}, {2, 0}, {2, 1}, {1, 2}}};

/// Empirical check of the basic stochastic equalities, the unbalanced means
/// and the direct fourth-order term. Every comparison is at 3 standard errors
/// computed from the sample variance.
inline std::vector<MomentCheck> moment_suite(FluctuationKind kind, std::size_t n_samples, double dt,
                                             RandomStream& stream)
{
    require(n_samples >= 100, ErrorCode::InvalidArgument, "moment_suite: n_samples must be >= 100");
    require(dt > 0.0, ErrorCode::InvalidArgument, "moment_suite: dt must be positive");
    std::vector<MomentCheck> out;

    if (kind == FluctuationKind::Commuting) {
        ComplexAccumulator mean, square, modulus, cross_conj, cross, direct;
        std::array<ComplexAccumulator, kUnbalancedOrders.size()> unbalanced;
        for (std::size_t s = 0; s < n_samples; ++s) {
            const Complex z = sample_scalar(stream, dt).value;
            const Complex w = sample_scalar(stream, dt).value; // independent field
            mean.add(z);
            square.add(z * z);
            modulus.add(z * std::conj(z));
            cross_conj.add(z * std::conj(w));
            cross.add(z * w);
            direct.add(w * z * std::conj(z) * std::conj(w) / (dt * dt));
            for (std::size_t u = 0; u < kUnbalancedOrders.size(); ++u)
                unbalanced[u].add(std::pow(z, kUnbalancedOrders[u][0]) *
                                  std::pow(std::conj(z), kUnbalancedOrders[u][1]));
        }
        out.push_back(detail::finish_check("E[dxi]", mean, 0.0));
        out.push_back(detail::finish_check("E[dxi^2]", square, 0.0));
        out.push_back(detail::finish_check("E[dxi dxi*]", modulus, dt));
        out.push_back(detail::finish_check("E[dxi_j dxi_k*]", cross_conj, 0.0));
        out.push_back(detail::finish_check("E[dxi_j dxi_k]", cross, 0.0));
        for (std::size_t u = 0; u < kUnbalancedOrders.size(); ++u)
            out.push_back(detail::finish_check("unbalanced(" + std::to_string(kUnbalancedOrders[u][0]) + "," +
                                                   std::to_string(kUnbalancedOrders[u][1]) + ")",
                                               unbalanced[u], 0.0));
        out.push_back(detail::finish_check("direct/dt^2", direct, 1.0));
        return out;
    }

    std::array<ComplexAccumulator, 3> comp_mean;
    std::array<std::array<ComplexAccumulator, 3>, 3> comp_prod, comp_conj;
    std::array<ComplexAccumulator, 4> mat_mean, mat_gram;
    std::array<std::array<ComplexAccumulator, 4>, kUnbalancedOrders.size()> unbalanced;
    ComplexAccumulator direct;

    for (std::size_t s = 0; s < n_samples; ++s) {
        const IsoIncrement inc = sample_pauli(stream, dt);
        const IsoIncrement other = sample_pauli(stream, dt);
        const auto& c = inc.components;
        for (std::size_t i = 0; i < 3; ++i) {
            comp_mean[i].add(c[i]);
            for (std::size_t j = 0; j < 3; ++j) {
                comp_prod[i][j].add(c[i] * c[j]);
                comp_conj[i][j].add(c[i] * std::conj(c[j]));
            }
        }
        const Matrix2 a = iso_matrix(c);
        const Matrix2 b = iso_matrix(other.components);
        const Matrix2 ad = a.adjoint();
        detail::add_matrix_sample(mat_mean, a);
        detail::add_matrix_sample(mat_gram, a * ad);
        for (std::size_t u = 0; u < kUnbalancedOrders.size(); ++u)
            detail::add_matrix_sample(unbalanced[u], detail::matrix_power(a, kUnbalancedOrders[u][0]) *
                                                         detail::matrix_power(ad, kUnbalancedOrders[u][1]));
        direct.add((b * a * ad * b.adjoint()).trace() / (2.0 * dt * dt));
    }

    for (std::size_t i = 0; i < 3; ++i) {
        const std::string si = std::to_string(i + 1);
        out.push_back(detail::finish_check("E[dxi_" + si + "]", comp_mean[i], 0.0));
        for (std::size_t j = 0; j < 3; ++j) {
            const std::string sj = std::to_string(j + 1);
            if (j >= i) out.push_back(detail::finish_check("E[dxi_" + si + " dxi_" + sj + "]", comp_prod[i][j], 0.0));
            out.push_back(detail::finish_check("E[dxi_" + si + " dxi_" + sj + "^dag]", comp_conj[i][j],
                                               i == j ? Complex(dt) : Complex(0.0)));
        }
    }
    detail::add_matrix_checks(out, "E[dxi]", mat_mean, Matrix2::Zero());
    detail::add_matrix_checks(out, "E[dxi dxi^dag]", mat_gram, Matrix2::Identity() * dt);
    for (std::size_t u = 0; u < kUnbalancedOrders.size(); ++u)
        detail::add_matrix_checks(out,
                                  "unbalanced(" + std::to_string(kUnbalancedOrders[u][0]) + "," +
                                      std::to_string(kUnbalancedOrders[u][1]) + ")",
                                  unbalanced[u], Matrix2::Zero());
    out.push_back(detail::finish_check("direct/dt^2", direct, 1.0));
    return out;
}

} // namespace stfluct
