#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "stfluct/core.hpp"
#include "stfluct/parallel.hpp"
#include "stfluct/random.hpp"
#include "stfluct/stats.hpp"

using namespace stfluct;

namespace {

ErrorCode code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected stfluct::Error";
    return ErrorCode::InternalConsistency;
}

} // namespace

TEST(ComplexOperator, ConstructionAndAccess)
{
    const std::vector<Complex> e{1.0, 2.0, Complex(0, 3), 4.0};
    const ComplexOperator a(2, e);
    EXPECT_EQ(a.dim(), 2);
    EXPECT_EQ(a(0, 1), Complex(2.0));
    EXPECT_EQ(a(1, 0), Complex(0, 3));
    EXPECT_EQ(a.entries(), e);
    EXPECT_EQ(a.trace(), Complex(5.0));
    EXPECT_EQ(code_of([&] { ComplexOperator(2, std::span<const Complex>(e.data(), 3)); }),
              ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([] { ComplexOperator(Matrix(2, 3)); }), ErrorCode::DimensionMismatch);
}

TEST(ComplexOperator, ArithmeticMatchesHandValues)
{
    const ComplexOperator a{{1.0, 2.0}, {3.0, 4.0}};
    const ComplexOperator b{{0.0, 1.0}, {1.0, 0.0}};
    const ComplexOperator ab{{2.0, 1.0}, {4.0, 3.0}};
    EXPECT_EQ(a * b, ab);
    EXPECT_EQ(a + b, (ComplexOperator{{1.0, 3.0}, {4.0, 4.0}}));
    EXPECT_EQ(a - a, ComplexOperator::zero(2));
    EXPECT_EQ(a * Complex(2.0), (ComplexOperator{{2.0, 4.0}, {6.0, 8.0}}));
    EXPECT_EQ(dagger(ComplexOperator{{1.0, kI}, {0.0, 1.0}}), (ComplexOperator{{1.0, 0.0}, {-kI, 1.0}}));
    EXPECT_EQ(code_of([&] { (void)(a * ComplexOperator::identity(3)); }), ErrorCode::DimensionMismatch);
}

TEST(ComplexOperator, HermitianAndUnitaryPredicates)
{
    for (int i = 1; i <= 3; ++i) {
        EXPECT_TRUE(pauli(i).is_hermitian(0.0));
        EXPECT_TRUE(pauli(i).is_unitary(1e-15));
    }
    EXPECT_FALSE((ComplexOperator{{0.0, 1.0}, {0.0, 0.0}}).is_hermitian(1e-12));
    EXPECT_EQ(code_of([] { pauli(0); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { pauli(4); }), ErrorCode::InvalidArgument);
}

// sigma_i sigma_j = delta_ij I + i eps_ijk sigma_k, with the Levi-Civita
// symbol written out.
TEST(Pauli, ProductTable)
{
    auto eps = [](int i, int j, int k) {
        if (i == j || j == k || i == k) return 0;
        return ((i == 1 && j == 2) || (i == 2 && j == 3) || (i == 3 && j == 1)) ? 1 : -1;
    };
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) {
            ComplexOperator expected = ComplexOperator::identity(2) * Complex(i == j ? 1.0 : 0.0);
            for (int k = 1; k <= 3; ++k) expected = expected + pauli(k) * (kI * double(eps(i, j, k)));
            EXPECT_LT((pauli(i) * pauli(j)).max_abs_diff(expected), 1e-15) << i << j;
        }
}

TEST(Kron, LayoutAndPartialTraces)
{
    const ComplexOperator a{{1.0, 2.0}, {3.0, 4.0}};
    const ComplexOperator b{{0.0, 5.0}, {6.0, 7.0}};
    const ComplexOperator k = kron(a, b);
    ASSERT_EQ(k.dim(), 4);
    // (i, k) row index = 2 i + k with system first.
    EXPECT_EQ(k(0, 1), Complex(5.0));
    EXPECT_EQ(k(1, 2), Complex(2.0 * 6.0));
    EXPECT_EQ(k(3, 3), Complex(28.0));
    EXPECT_LT(partial_trace_iso(k, 2, 2).max_abs_diff(a * b.trace()), 1e-14);
    EXPECT_LT(partial_trace_system(k, 2, 2).max_abs_diff(b * a.trace()), 1e-14);
    EXPECT_EQ(code_of([&] { partial_trace_iso(k, 3, 2); }), ErrorCode::DimensionMismatch);
}

TEST(DensityOperator, Validation)
{
    EXPECT_NO_THROW(DensityOperator(ComplexOperator{{0.5, 0.5}, {0.5, 0.5}}, true));
    EXPECT_EQ(code_of([] { DensityOperator(ComplexOperator{{0.5, 0.5}, {0.0, 0.5}}, true); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { DensityOperator(ComplexOperator{{0.6, 0.0}, {0.0, 0.6}}, true); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { DensityOperator(ComplexOperator{{1.5, 0.0}, {0.0, -0.5}}, true); }),
              ErrorCode::InvalidArgument);
    EXPECT_NO_THROW(DensityOperator(ComplexOperator{{1.5, 0.0}, {0.0, -0.5}}, false));

    const auto rho = DensityOperator::normalize(ComplexOperator{{2.0, 2.0}, {2.0, 2.0}});
    EXPECT_NEAR(rho(0, 1).real(), 0.5, 1e-15);
    EXPECT_NEAR(rho.min_eigenvalue(), 0.0, 1e-15);

    Vector psi(2);
    psi << 3.0, Complex(0, 4.0);
    const auto pure = DensityOperator::pure(psi);
    EXPECT_NEAR(pure(0, 0).real(), 9.0 / 25.0, 1e-15);
    EXPECT_NEAR(std::abs(pure(0, 1) - Complex(0, -12.0 / 25.0)), 0.0, 1e-15);
}

TEST(TrajectoryState, WeightIsSquaredNorm)
{
    Vector v(2);
    v << 1.0, Complex(1.0, 1.0);
    EXPECT_DOUBLE_EQ(TrajectoryState(v).weight(), 3.0);
}

TEST(RandomStream, DeterministicAndIndependentStreams)
{
    RandomStream a(42, 0), b(42, 0), c(42, 1), d(43, 0);
    std::vector<std::uint64_t> va, vb, vc, vd;
    for (int i = 0; i < 8; ++i) {
        va.push_back(a.next_u64());
        vb.push_back(b.next_u64());
        vc.push_back(c.next_u64());
        vd.push_back(d.next_u64());
    }
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
    EXPECT_NE(va, vd);
}

TEST(RandomStream, ComplexGaussianMoments)
{
    RandomStream s(7, 3);
    const double v = 0.25;
    ComplexAccumulator mean, square, modulus;
    for (int i = 0; i < 200000; ++i) {
        const Complex z = draw_complex_gaussian(s, v);
        mean.add(z);
        square.add(z * z);
        modulus.add(std::norm(z));
    }
    EXPECT_TRUE(within_standard_errors(mean.estimate().mean, mean.estimate().standard_error));
    EXPECT_TRUE(within_standard_errors(square.estimate().mean, square.estimate().standard_error));
    EXPECT_TRUE(within_standard_errors(modulus.estimate().mean - v, modulus.estimate().standard_error));
    EXPECT_EQ(draw_complex_gaussian(s, 0.0), Complex(0.0));
    EXPECT_EQ(code_of([&] { draw_complex_gaussian(s, -1.0); }), ErrorCode::InvalidArgument);
}

TEST(RandomStream, UniformIndexInRange)
{
    RandomStream s(1, 1);
    std::vector<int> hits(3, 0);
    for (int i = 0; i < 3000; ++i) ++hits[s.uniform_index(3)];
    for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Stats, AccumulatorMatchesDirectFormula)
{
    const std::vector<double> x{1.0, 2.0, 4.0, 7.0};
    RealAccumulator acc;
    for (double v : x) acc.add(v);
    const double mean = 3.5;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    EXPECT_DOUBLE_EQ(acc.estimate().mean, mean);
    EXPECT_NEAR(acc.estimate().standard_error, std::sqrt(ss / 3.0 / 4.0), 1e-14);
    EXPECT_TRUE(within_standard_errors(0.3, 0.1));
    EXPECT_FALSE(within_standard_errors(0.31, 0.1));
}

TEST(Parallel, EveryIndexOnceAndOrderedResults)
{
    for (unsigned workers : {1u, 2u, 5u}) {
        std::vector<std::atomic<int>> seen(1000);
        std::vector<double> out(1000);
        parallel_for_index(out.size(), workers, [&](std::size_t i) {
            ++seen[i];
            out[i] = static_cast<double>(i) * 0.5;
        });
        for (std::size_t i = 0; i < out.size(); ++i) {
            EXPECT_EQ(seen[i].load(), 1);
            EXPECT_EQ(out[i], static_cast<double>(i) * 0.5);
        }
    }
}

TEST(Parallel, RethrowsWorkerException)
{
    EXPECT_THROW(parallel_for_index(500, 3,
                                    [](std::size_t i) {
                                        if (i == 321) throw std::runtime_error("boom");
                                    }),
                 std::runtime_error);
}
