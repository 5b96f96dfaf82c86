#include <cmath>

#include <gtest/gtest.h>

#include "stfluct/fluctuations.hpp"

using namespace stfluct;

TEST(Fluctuations, ParseKind)
{
    EXPECT_EQ(parse_fluctuation_kind("pauli"), FluctuationKind::Pauli);
    EXPECT_EQ(parse_fluctuation_kind("commuting"), FluctuationKind::Commuting);
    EXPECT_THROW(parse_fluctuation_kind("quaternion"), Error);
    EXPECT_EQ(to_string(FluctuationKind::Pauli), "pauli");
}

TEST(Fluctuations, IsoMatrixIsScaledPauliCombination)
{
    const std::array<Complex, 3> c{Complex(0.3, -0.1), Complex(-0.2, 0.5), Complex(0.7, 0.2)};
    ComplexOperator expected = ComplexOperator::zero(2);
    for (int i = 0; i < 3; ++i) expected = expected + pauli(i + 1) * (c[static_cast<std::size_t>(i)] / std::sqrt(3.0));
    EXPECT_LT(IsoIncrement{c}.matrix().max_abs_diff(expected), 1e-15);
}

TEST(Fluctuations, SamplersRejectNonPositiveDt)
{
    RandomStream s(1, 0);
    EXPECT_THROW(sample_scalar(s, 0.0), Error);
    EXPECT_THROW(sample_pauli(s, -1.0), Error);
}

TEST(Exchange, PauliSumIsMinusThreeIdentity)
{
    const auto sum = pauli_exchange_sum();
    EXPECT_EQ(sum, ComplexOperator::identity(2) * Complex(-3.0));
}

TEST(Exchange, AlgebraicValues)
{
    const auto p = exchange_mean_algebraic(FluctuationKind::Pauli);
    EXPECT_NEAR(p.eta, -1.0 / 3.0, 1e-15);
    EXPECT_EQ(p.standard_error, 0.0);
    EXPECT_EQ(p.method, EtaMethod::Algebraic);
    EXPECT_EQ(exchange_mean_algebraic(FluctuationKind::Commuting).eta, 1.0);
}

TEST(Exchange, MonteCarloWithinThreeStandardErrors)
{
    for (auto kind : {FluctuationKind::Pauli, FluctuationKind::Commuting}) {
        RandomStream s(11, 0);
        const auto mc = exchange_mean_mc(kind, 100000, 0.01, s);
        const double exact = exchange_mean_algebraic(kind).eta;
        EXPECT_TRUE(within_standard_errors(mc.eta - exact, mc.standard_error))
            << to_string(kind) << " " << mc.eta << " +- " << mc.standard_error;
        EXPECT_GT(mc.standard_error, 0.0);
    }
}

TEST(Exchange, DirectPairingIsOne)
{
    for (auto kind : {FluctuationKind::Pauli, FluctuationKind::Commuting}) {
        RandomStream s(12, 0);
        const auto mc = direct_mean_mc(kind, 100000, 0.5, s);
        EXPECT_TRUE(within_standard_errors(mc.eta - 1.0, mc.standard_error)) << mc.eta << " +- " << mc.standard_error;
    }
}

TEST(Exchange, SmallSampleStillValid)
{
    RandomStream s(13, 0);
    const auto mc = exchange_mean_mc(FluctuationKind::Pauli, 100, 1.0, s);
    EXPECT_TRUE(std::isfinite(mc.eta));
    EXPECT_GT(mc.standard_error, 0.0);
    EXPECT_THROW(exchange_mean_mc(FluctuationKind::Pauli, 99, 1.0, s), Error);
}

TEST(Moments, AllChecksPassForBothKinds)
{
    for (auto kind : {FluctuationKind::Commuting, FluctuationKind::Pauli}) {
        RandomStream s(21, kind == FluctuationKind::Pauli ? 1 : 0);
        const auto checks = moment_suite(kind, kind == FluctuationKind::Pauli ? 100000 : 1000000, 1e-3, s);
        EXPECT_FALSE(checks.empty());
        for (const auto& c : checks)
            EXPECT_TRUE(c.passed) << to_string(kind) << " " << c.name << ": " << c.estimate << " vs " << c.expected
                                  << " se " << c.standard_error;
    }
}

// The suite must be able to fail: a mean check against a wrong target.
TEST(Moments, DetectsWrongVariance)
{
    RandomStream s(22, 0);
    ComplexAccumulator acc;
    for (int i = 0; i < 100000; ++i) acc.add(std::norm(sample_scalar(s, 1.0).value));
    EXPECT_FALSE(within_standard_errors(acc.estimate().mean - 1.05, acc.estimate().standard_error));
}
