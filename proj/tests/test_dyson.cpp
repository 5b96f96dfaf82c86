#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "stfluct/dyson.hpp"
#include "stfluct/interferometer.hpp"

using namespace stfluct;

namespace {

/// n steps, one term per step: op (x) dxi(field 0, k).
FluctuationSchedule single_field_schedule(const ComplexOperator& op, std::size_t n, double dt)
{
    FluctuationSchedule s;
    s.dt = dt;
    for (std::size_t k = 0; k < n; ++k) s.steps.push_back({{op, {0, static_cast<std::int64_t>(k)}}});
    return s;
}

IncrementTable fixed_scalar_table(const std::vector<Complex>& v)
{
    IncrementTable t(FluctuationKind::Commuting);
    std::vector<std::array<Complex, 3>> vals;
    for (auto x : v) vals.push_back({x, 0.0, 0.0});
    t.set_field(0, 0, vals);
    return t;
}

DensityOperator plus_state() { return DensityOperator::normalize(ComplexOperator{{1.0, 1.0}, {1.0, 1.0}}); }

} // namespace

TEST(Propagator, SingleStepIsIPlusDG)
{
    const ComplexOperator a{{0.1, 0.2}, {0.0, -0.3}};
    const auto s = single_field_schedule(a, 1, 0.01);
    const auto t = fixed_scalar_table({Complex(0.5, 0.5)});
    const auto k = time_ordered_propagator(s, t);
    EXPECT_LT(k.max_abs_diff(ComplexOperator::identity(2) + a * Complex(0.5, 0.5)), 1e-15);
}

TEST(Propagator, ZeroIncrementsGiveIdentity)
{
    const auto s = single_field_schedule(pauli(1), 5, 0.01);
    const auto k = time_ordered_propagator(s, fixed_scalar_table(std::vector<Complex>(5, 0.0)));
    EXPECT_EQ(k, ComplexOperator::identity(2));
}

TEST(Propagator, LaterStepsOnTheLeft)
{
    FluctuationSchedule s;
    s.dt = 1.0;
    s.steps = {{{pauli(1), {0, 0}}}, {{pauli(3), {0, 1}}}};
    const auto k = time_ordered_propagator(s, fixed_scalar_table({1.0, 1.0}));
    const auto expected = (ComplexOperator::identity(2) + pauli(3)) * (ComplexOperator::identity(2) + pauli(1));
    EXPECT_LT(k.max_abs_diff(expected), 1e-15);
}

TEST(Propagator, UnresolvedReference)
{
    const auto s = single_field_schedule(pauli(1), 3, 0.01);
    try {
        time_ordered_propagator(s, fixed_scalar_table({1.0, 2.0}));
        FAIL() << "no error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnresolvedReference);
    }
}

// With a scalar operator and scalar increments, prod (1 + c dxi_k) is within
// O(sum |c dxi|^2) of exp(c sum dxi).
TEST(Propagator, CommutingScheduleApproachesExponential)
{
    const double dt = 1e-4;
    const std::size_t n = 2000;
    const Complex c(0.3, 0.0);
    const auto s = single_field_schedule(ComplexOperator::identity(1) * c, n, dt);
    RandomStream rs(3, 0);
    const auto t = IncrementTable::for_schedule(s, FluctuationKind::Commuting, rs);
    Complex total{};
    double quad = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const Complex x = c * t.lookup({0, static_cast<std::int64_t>(k)})[0];
        total += x;
        quad += std::norm(x);
    }
    const Complex k = time_ordered_propagator(s, t)(0, 0);
    const Complex expo = std::exp(total);
    EXPECT_LT(std::abs(k - expo), 2.0 * quad * std::abs(expo) + 1e-12);
}

TEST(Propagator, GenerationOrderDoesNotMatter)
{
    FluctuationSchedule s;
    s.dt = 0.1;
    s.steps = {{{pauli(1), {0, 0}}, {pauli(2), {1, 0}}}, {{pauli(3), {0, 1}}}, {{pauli(2), {1, 1}}}};
    RandomStream rs(4, 0);
    const auto t = IncrementTable::for_schedule(s, FluctuationKind::Pauli, rs);
    // Same samples, installed field 1 first and each field reversed then restored.
    IncrementTable u(FluctuationKind::Pauli);
    for (int f : {1, 0}) {
        const auto& field = t.fields()[static_cast<std::size_t>(f)];
        std::vector<std::array<Complex, 3>> rev(field.values.rbegin(), field.values.rend());
        std::vector<std::array<Complex, 3>> back(rev.rbegin(), rev.rend());
        u.set_field(f, field.first_index, back);
    }
    EXPECT_EQ(time_ordered_propagator(s, t), time_ordered_propagator(s, u));
}

TEST(Schedule, EachSampleAtMostTwice)
{
    FluctuationSchedule s;
    s.dt = 0.1;
    s.steps = {{{pauli(1), {0, 0}}}, {{pauli(1), {0, 0}}}};
    EXPECT_NO_THROW(s.validate());
    s.steps.push_back({{pauli(3), {0, 0}}});
    EXPECT_THROW(s.validate(), Error);
}

TEST(Dyson, FirstOrderOfOneStep)
{
    const ComplexOperator a{{0.0, 1.0}, {2.0, 0.0}};
    const auto s = single_field_schedule(a, 1, 0.1);
    const auto d = dyson_terms(s, fixed_scalar_table({Complex(0.0, 2.0)}), 1);
    ASSERT_EQ(d.orders.size(), 2u);
    EXPECT_EQ(d.orders[0], ComplexOperator::identity(2));
    EXPECT_LT(d.orders[1].max_abs_diff(a * Complex(0.0, 2.0)), 1e-15);
}

TEST(Dyson, SecondOrderHasNoEqualTimeProduct)
{
    FluctuationSchedule s;
    s.dt = 1.0;
    s.steps = {{{pauli(1), {0, 0}}}, {{pauli(2), {0, 1}}}};
    const auto d = dyson_terms(s, fixed_scalar_table({0.7, -1.3}), 2);
    const auto g1 = pauli(1) * Complex(0.7);
    const auto g2 = pauli(2) * Complex(-1.3);
    EXPECT_LT(d.orders[2].max_abs_diff(g2 * g1), 1e-15);
    EXPECT_LT(d.orders[1].max_abs_diff(g1 + g2), 1e-15);
}

TEST(Dyson, PartialSumsConvergeToPropagator)
{
    FluctuationSchedule s;
    s.dt = 0.05;
    for (int k = 0; k < 6; ++k)
        s.steps.push_back({{pauli(1 + k % 3) * Complex(0.8), {0, k}}, {pauli(1 + (k + 1) % 3) * Complex(0.5), {1, k}}});
    RandomStream rs(8, 0);
    const auto t = IncrementTable::for_schedule(s, FluctuationKind::Pauli, rs);
    const auto k = time_ordered_propagator(s, t);
    const auto d = dyson_terms(s, t, 12);
    double previous = 1e300;
    ComplexOperator partial = ComplexOperator::zero(4);
    for (int n = 0; n <= 12; ++n) {
        partial = partial + d.orders[static_cast<std::size_t>(n)];
        const double err = k.max_abs_diff(partial);
        if (n < 6) EXPECT_LT(err, previous) << n;
        previous = err;
    }
    EXPECT_LT(previous, 1e-14);
}

TEST(SecondOrderDensity, ZeroAmplitude)
{
    const auto s = single_field_schedule(ComplexOperator::zero(2), 4, 0.1);
    RandomStream rs(1, 0);
    const auto r = density_second_order(plus_state(), s, FluctuationKind::Pauli, 100, rs);
    EXPECT_EQ(r.rho, ComplexOperator::zero(2));
}

// L = sqrt(gamma) P1 over n steps: M[K1 rho0 K1^dag] = gamma t P1 rho0 P1.
TEST(SecondOrderDensity, MarkovFirstOrderMean)
{
    const double gamma = 0.8, dt = 0.05;
    const std::size_t n = 20;
    const ComplexOperator p1{{std::sqrt(gamma), 0.0}, {0.0, 0.0}};
    const auto s = single_field_schedule(p1, n, dt);
    RandomStream rs(2, 0);
    const auto r = density_second_order(plus_state(), s, FluctuationKind::Commuting, 20000, rs);
    const double expected = gamma * dt * static_cast<double>(n) * 0.5;
    EXPECT_TRUE(within_standard_errors(r.first_order(0, 0) - expected, r.first_order_se))
        << r.first_order(0, 0) << " vs " << expected;
    EXPECT_NEAR(std::abs(r.first_order(1, 1)), 0.0, 1e-15);
}

TEST(SecondOrderDensity, UnbalancedCrossTermVanishes)
{
    FluctuationSchedule s;
    s.dt = 0.1;
    for (int k = 0; k < 8; ++k) s.steps.push_back({{pauli(1 + k % 3), {0, k}}});
    RandomStream rs(3, 0);
    const auto r = density_second_order(plus_state(), s, FluctuationKind::Pauli, 5000, rs);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            EXPECT_TRUE(within_standard_errors(r.cross(a, b), r.cross_se(a, b))) << a << b << " " << r.cross(a, b);
}

TEST(Drift, SecondOrderValues)
{
    EXPECT_EQ(drift_second_order(ComplexOperator::zero(2)), ComplexOperator::zero(2));
    EXPECT_EQ(drift_second_order(ComplexOperator::identity(2) * Complex(4.0)), ComplexOperator::identity(2) * Complex(-2.0));
}

// Adding S_R rho0 + rho0 S_R to the fluctuation terms restores the trace.
TEST(Drift, RestoresTraceOnInterferometerSchedule)
{
    const auto g = make_triangle_geometry(1.0, 0.1, 20);
    const auto s = build_propagating_schedule(g, 0.5, ScheduleResolution::Cell);
    RandomStream rs(4, 0);
    const auto r = density_second_order(plus_state(), s, FluctuationKind::Pauli, 2000, rs);
    const auto joint0 = kron(plus_state().op(), ComplexOperator::identity(2) * Complex(0.5));
    const auto sr = drift_second_order(r.gram_mean);
    const auto drift_term = partial_trace_iso(sr * joint0 + joint0 * sr, 2, 2);
    const Complex trace = (plus_state().op() + drift_term + r.rho).trace();
    // Holds sample by sample, so only roundoff remains.
    EXPECT_NEAR(std::abs(trace - 1.0), 0.0, 1e-12) << trace;
    EXPECT_GT(std::abs(r.rho.trace()), 0.1);
}

// Exact mean of K2 rho0 K2^dag on the cell schedule, by pairing samples:
// a sample s appears once on arm 1 (cell c1) and once on arm 2 (cell c2).
// The 11 entry is gamma^2 dt^2 * 4 * #{cell pairs k < k'}; the 12 entry
// sums, over ordered sample pairs with c1(s) < c1(s'), 1 when c2(s) < c2(s')
// and eta when c2(s) > c2(s').
TEST(SecondOrderDensity, InterferometerPauliScheduleMatchesPairingOracle)
{
    const auto g = make_triangle_geometry(1.0, 0.1, 20);
    const double gamma = 0.5;
    const auto s = build_propagating_schedule(g, gamma, ScheduleResolution::Cell);
    const auto events = touch_events(g);
    std::map<IncrementRef, std::pair<std::int64_t, std::int64_t>> cells;
    for (const auto& e : events) (e.arm == Arm::One ? cells[e.ref].first : cells[e.ref].second) = e.cell;
    const double eta = -1.0 / 3.0;
    double od = 0.0;
    for (const auto& [r1, c] : cells)
        for (const auto& [r2, d] : cells) {
            if (!(c.first < d.first)) continue;
            if (c.second < d.second) od += 1.0;
            if (c.second > d.second) od += eta;
        }
    const double dt = g.dt();
    const double n = static_cast<double>(g.n_steps);
    const double diag = gamma * gamma * dt * dt * 4.0 * n * (n - 1.0) / 2.0 * 0.5;
    const double off = gamma * gamma * dt * dt * od * 0.5;

    RandomStream rs(5, 0);
    const auto r = density_second_order(plus_state(), s, FluctuationKind::Pauli, 20000, rs);
    EXPECT_TRUE(within_standard_errors(r.second_order(0, 0) - diag, r.second_order_se))
        << r.second_order(0, 0) << " vs " << diag << " se " << r.second_order_se;
    EXPECT_TRUE(within_standard_errors(r.second_order(0, 1) - off, r.second_order_se))
        << r.second_order(0, 1) << " vs " << off << " se " << r.second_order_se;

    // Both exact discrete pairings and the characteristic-sum oracle sit
    // near the continuum coefficient 2 A (eta - 1); on this coarse grid
    // (x_max = 2 dt) the sums oracle is off by about 20%.
    const double continuum = 2.0 * g.area * (eta - 1.0);
    const double pairing = 2.0 * (off - diag) / (gamma * gamma);
    EXPECT_NEAR(pairing, continuum, 0.05 * std::abs(continuum));
    EXPECT_NEAR(oracle_characteristic_sums(g, g.n_steps, eta).coeff_od, continuum, 0.25 * std::abs(continuum));
}
