#pragma once

// Two-arm matter interferometer: geometry, light-line scheduling of
// propagating fluctuations, Monte Carlo suppression of the off-diagonal
// element, the analytic suppression factors and the discrete oracle for the
// characteristic-function sums.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stfluct/core.hpp"
#include "stfluct/dyson.hpp"
#include "stfluct/error.hpp"
#include "stfluct/fluctuations.hpp"
#include "stfluct/parallel.hpp"
#include "stfluct/qsd_markov.hpp"
#include "stfluct/random.hpp"
#include "stfluct/stats.hpp"

namespace stfluct {

enum class ScenarioKind { DeltaFluctuations, CommutingPropagating, PauliPropagating };

inline std::string_view to_string(ScenarioKind k)
{
    switch (k) {
    case ScenarioKind::DeltaFluctuations: return "delta";
    case ScenarioKind::CommutingPropagating: return "commuting";
    case ScenarioKind::PauliPropagating: return "pauli";
    }
    return "?";
}

inline ScenarioKind parse_scenario_kind(std::string_view s)
{
    if (s == "delta") return ScenarioKind::DeltaFluctuations;
    if (s == "commuting") return ScenarioKind::CommutingPropagating;
    if (s == "pauli") return ScenarioKind::PauliPropagating;
    throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + std::string(s) + "'");
}

struct Scenario {
    ScenarioKind kind = ScenarioKind::PauliPropagating;
    double gamma = 0.0;

    Scenario(ScenarioKind k, double g) : kind(k), gamma(g)
    {
        require(gamma >= 0.0 && std::isfinite(gamma), ErrorCode::InvalidArgument, "Scenario: gamma must be >= 0");
    }

    bool propagating() const noexcept { return kind != ScenarioKind::DeltaFluctuations; }
};

/// Symmetric triangle separation x(t) = x_max (1 - |2t/T - 1|), c = 1.
/// Time step k covers [k dt, (k+1) dt) and is represented by its midpoint.
struct InterferometerGeometry {
    double T = 0.0;
    double x_max = 0.0;
    std::size_t n_steps = 0;
    double area = 0.0;

    double dt() const noexcept { return T / static_cast<double>(n_steps); }
    double x(double t) const noexcept
    {
        if (t <= 0.0 || t >= T) return 0.0;
        return x_max * (1.0 - std::abs(2.0 * t / T - 1.0));
    }
    double time(std::size_t k) const noexcept { return (static_cast<double>(k) + 0.5) * dt(); }
    /// x(t_k) in grid cells, rounded to nearest.
    std::int64_t delay_steps(std::size_t k) const { return std::llround(x(time(k)) / dt()); }
    bool degenerate() const noexcept { return x_max == 0.0; }
};

inline InterferometerGeometry make_triangle_geometry(double T, double x_max, std::size_t n_steps)
{
    require(T > 0.0 && std::isfinite(T), ErrorCode::InvalidArgument, "geometry: T must be positive");
    require(x_max >= 0.0 && std::isfinite(x_max), ErrorCode::InvalidArgument, "geometry: x_max must be >= 0");
    require(n_steps >= 10, ErrorCode::InvalidArgument, "geometry: n_steps must be >= 10");
    require(x_max <= 0.25 * T, ErrorCode::InvalidArgument,
            "geometry: x_max must be small compared with T (x_max <= T/4)");
    const double dt = T / static_cast<double>(n_steps);
    require(x_max == 0.0 || x_max / dt >= 1.0, ErrorCode::InvalidArgument,
            "geometry: grid too coarse to represent the maximum delay (need x_max >= T/n_steps)");
    return {T, x_max, n_steps, 0.5 * x_max * T};
}

struct LightlineTimes {
    double plus = 0.0;
    double minus = 0.0;
    double plus_plus = 0.0;
    double minus_minus = 0.0;
};

inline LightlineTimes lightline_times(double t, const InterferometerGeometry& g)
{
    require(t >= 0.0 && t <= g.T, ErrorCode::InvalidArgument, "lightline_times: t must lie in [0, T]");
    const double x = g.x(t);
    return {t + x, t - x, t + 2.0 * x, t - 2.0 * x};
}

/// Field ids of the two propagating fluctuation fields.
inline constexpr int kFieldPlus = 0;  // xi+, travels towards arm 2 and arrives at t+
inline constexpr int kFieldMinus = 1; // xi-, arrives at arm 2 at t-

enum class Arm { One, Two };

/// One application of a fluctuation sample to one arm.
struct TouchEvent {
    double time = 0.0;
    Arm arm = Arm::One;
    IncrementRef ref;
    /// Grid cell the touch belongs to.
    std::int64_t cell = 0;
};

/// Every sample xi+-(t_j) touches arm 1 at t_j and arm 2 at t_j +- x(t_j).
/// Arm-1 events come first, ordered by j; the two simultaneous touches of
/// cell j alternate (xi+ first for even j, xi- first for odd j), since a
/// fixed order would add one spurious exchange pair per cell. Arm-2 events
/// follow, ordered by exact arrival time. The arm-2 cell is j +- the rounded
/// delay, which always lies inside [0, n_steps) because x(t) < min(t, T-t).
inline std::vector<TouchEvent> touch_events(const InterferometerGeometry& g)
{
    const std::size_t n = g.n_steps;
    std::vector<TouchEvent> arm1, arm2;
    arm1.reserve(2 * n);
    arm2.reserve(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = g.time(j);
        const double x = g.x(t);
        const auto jj = static_cast<std::int64_t>(j);
        const std::int64_t d = g.delay_steps(j);
        const bool plus_first = j % 2 == 0;
        arm1.push_back({t, Arm::One, {plus_first ? kFieldPlus : kFieldMinus, jj}, jj});
        arm1.push_back({t, Arm::One, {plus_first ? kFieldMinus : kFieldPlus, jj}, jj});
        arm2.push_back({t + x, Arm::Two, {kFieldPlus, jj}, std::clamp<std::int64_t>(jj + d, 0, static_cast<std::int64_t>(n) - 1)});
        arm2.push_back({t - x, Arm::Two, {kFieldMinus, jj}, std::clamp<std::int64_t>(jj - d, 0, static_cast<std::int64_t>(n) - 1)});
    }
    std::stable_sort(arm2.begin(), arm2.end(), [](const TouchEvent& a, const TouchEvent& b) { return a.time < b.time; });
    arm1.insert(arm1.end(), arm2.begin(), arm2.end());
    return arm1;
}

inline ComplexOperator arm_projector(Arm a)
{
    return a == Arm::One ? ComplexOperator{{1.0, 0.0}, {0.0, 0.0}} : ComplexOperator{{0.0, 0.0}, {0.0, 1.0}};
}

enum class ScheduleResolution {
    /// One step per touch, in exact arrival order on each arm.
    Event,
    /// One step per grid cell; all touches in a cell summed into dF(t_k).
    Cell,
};

/// The propagating-fluctuation schedule sqrt(gamma) [P1 (xi+ + xi-)(t) + P2 (xi+(t-) + xi-(t+))].
/// In Event resolution the two arms' steps are concatenated: operators on
/// different arms multiply to zero, so their relative order is irrelevant.
inline FluctuationSchedule build_propagating_schedule(const InterferometerGeometry& g, double gamma,
                                                      ScheduleResolution resolution)
{
    require(gamma >= 0.0, ErrorCode::InvalidArgument, "build_propagating_schedule: gamma must be >= 0");
    const Complex s = std::sqrt(gamma);
    const ComplexOperator p1 = arm_projector(Arm::One) * s;
    const ComplexOperator p2 = arm_projector(Arm::Two) * s;
    FluctuationSchedule out;
    out.dt = g.dt();
    const auto events = touch_events(g);
    if (resolution == ScheduleResolution::Event) {
        out.steps.reserve(events.size());
        for (const auto& e : events) out.steps.push_back({{e.arm == Arm::One ? p1 : p2, e.ref}});
        return out;
    }
    out.steps.resize(g.n_steps);
    for (const auto& e : events)
        out.steps[static_cast<std::size_t>(e.cell)].push_back({e.arm == Arm::One ? p1 : p2, e.ref});
    return out;
}

/// xi+ and xi- samples of variance dt for every grid index.
inline IncrementTable generate_propagating_fields(const InterferometerGeometry& g, FluctuationKind kind,
                                                  RandomStream& stream)
{
    IncrementTable t(kind);
    t.generate_field(kFieldPlus, 0, g.n_steps, g.dt(), stream);
    t.generate_field(kFieldMinus, 0, g.n_steps, g.dt(), stream);
    return t;
}

/// dF(t_k) for grid cell k on system (x) iso space (iso dimension 1 for
/// commuting fluctuations). Arm-2 contributions are the samples whose
/// rounded arrival falls in cell k.
inline ComplexOperator fluctuation_operator(std::size_t k, const InterferometerGeometry& g, const IncrementTable& fields,
                                            double gamma)
{
    require(k < g.n_steps, ErrorCode::InvalidArgument, "fluctuation_operator: k out of range");
    require(gamma >= 0.0, ErrorCode::InvalidArgument, "fluctuation_operator: gamma must be >= 0");
    const int iso = fields.iso_dim();
    const Complex s = std::sqrt(gamma);
    const auto kk = static_cast<std::int64_t>(k);
    Matrix a1 = fields.iso_factor({kFieldPlus, kk}) + fields.iso_factor({kFieldMinus, kk});
    Matrix a2 = Matrix::Zero(iso, iso);
    const std::int64_t reach = std::llround(g.x_max / g.dt()) + 1;
    const std::int64_t lo = std::max<std::int64_t>(0, kk - reach);
    const std::int64_t hi = std::min<std::int64_t>(static_cast<std::int64_t>(g.n_steps) - 1, kk + reach);
    for (std::int64_t j = lo; j <= hi; ++j) {
        const std::int64_t d = g.delay_steps(static_cast<std::size_t>(j));
        if (j + d == kk) a2 += fields.iso_factor({kFieldPlus, j});
        if (j - d == kk) a2 += fields.iso_factor({kFieldMinus, j});
    }
    const Matrix out = kron(arm_projector(Arm::One), ComplexOperator(Matrix(s * a1))).matrix() +
                       kron(arm_projector(Arm::Two), ComplexOperator(Matrix(s * a2))).matrix();
    return ComplexOperator(out);
}

enum class ReportMethod { Analytic, MonteCarlo, Oracle };

inline std::string_view to_string(ReportMethod m)
{
    switch (m) {
    case ReportMethod::Analytic: return "analytic";
    case ReportMethod::MonteCarlo: return "monte-carlo";
    case ReportMethod::Oracle: return "oracle";
    }
    return "?";
}

/// Result of the check that the iso-space factor of the propagating Pauli
/// simulation stays proportional to the identity.
struct IsoCheck {
    double max_deviation = 0.0;
    double standard_error = 0.0;
    bool passed = false;
};

struct SuppressionReport {
    double offdiag_ratio = 1.0;
    double standard_error = 0.0;
    ReportMethod method = ReportMethod::Analytic;
    std::size_t n_traj = 0;
    std::size_t n_steps = 0;
    std::optional<IsoCheck> iso_check;
};

/// Analytic off-diagonal ratio: exp(-gamma T), 1, or 1 - (8/3) gamma^2 A.
inline SuppressionReport suppression_analytic(const Scenario& sc, const InterferometerGeometry& g)
{
    SuppressionReport r;
    r.method = ReportMethod::Analytic;
    switch (sc.kind) {
    case ScenarioKind::DeltaFluctuations: r.offdiag_ratio = std::exp(-sc.gamma * g.T); break;
    case ScenarioKind::CommutingPropagating: r.offdiag_ratio = 1.0; break;
    case ScenarioKind::PauliPropagating: {
        const double eta = exchange_mean_algebraic(FluctuationKind::Pauli).eta;
        const double drop = 2.0 * sc.gamma * sc.gamma * g.area * (1.0 - eta);
        require(drop <= 0.5, ErrorCode::OutsideValidity,
                "outside perturbative validity: (8/3) gamma^2 area = " + std::to_string(drop) + " > 0.5");
        r.offdiag_ratio = 1.0 - drop;
        break;
    }
    }
    return r;
}

struct OracleSums {
    /// Coefficient of rho0 (continuum value 2 T^2).
    double coeff_rho0 = 0.0;
    /// Coefficient of P1 rho0 P2 + P2 rho0 P1 (continuum value 2 A (eta - 1)).
    double coeff_od = 0.0;
};

/// The discrete double sums over midpoints t_i < t_i':
///   coeff_rho0 = dt^2 sum 4
///   coeff_od   = dt^2 sum (eta - 1) chi(t_i' - 2 x(t_i') < t_i)
inline OracleSums oracle_characteristic_sums(const InterferometerGeometry& g, std::size_t n_steps, double eta)
{
    require(n_steps >= 10, ErrorCode::InvalidArgument, "oracle_characteristic_sums: n_steps must be >= 10");
    const double dt = g.T / static_cast<double>(n_steps);
    require(g.x_max == 0.0 || 2.0 * g.x_max / dt >= 2.0, ErrorCode::InvalidArgument,
            "oracle_characteristic_sums: maximum delay must span at least 2 grid cells");
    const auto n = static_cast<double>(n_steps);
    OracleSums out;
    out.coeff_rho0 = 4.0 * dt * dt * n * (n - 1.0) / 2.0;

    // For each t' count midpoints strictly inside (t' - 2x(t'), t').
    double count = 0.0;
    for (std::size_t ip = 0; ip < n_steps; ++ip) {
        const double tp = (static_cast<double>(ip) + 0.5) * dt;
        const double lower = tp - 2.0 * g.x(tp);
        // smallest i with (i + 1/2) dt > lower
        auto first = static_cast<std::int64_t>(std::floor(lower / dt - 0.5)) + 1;
        first = std::max<std::int64_t>(first, 0);
        if (static_cast<std::int64_t>(ip) > first) count += static_cast<double>(static_cast<std::int64_t>(ip) - first);
    }
    out.coeff_od = (eta - 1.0) * dt * dt * count;
    return out;
}

/// Off-diagonal ratio implied by the oracle sums: 1 + gamma^2 coeff_od.
inline SuppressionReport suppression_oracle(const Scenario& sc, const InterferometerGeometry& g, std::size_t n_steps)
{
    require(sc.propagating(), ErrorCode::InvalidArgument, "suppression_oracle: propagating scenarios only");
    const double eta = exchange_mean_algebraic(sc.kind == ScenarioKind::PauliPropagating ? FluctuationKind::Pauli
                                                                                         : FluctuationKind::Commuting)
                           .eta;
    const auto sums = oracle_characteristic_sums(g, n_steps, eta);
    SuppressionReport r;
    r.method = ReportMethod::Oracle;
    r.offdiag_ratio = 1.0 + sc.gamma * sc.gamma * sums.coeff_od;
    r.n_steps = n_steps;
    return r;
}

namespace detail {

/// Per-trajectory pieces of the ratio |mean(num)| / mean(den).
struct RatioSample {
    Complex num{};
    double den = 0.0;
};

inline double ratio_of_means(const std::vector<RatioSample>& s, const std::vector<std::size_t>* pick)
{
    Complex num{};
    double den = 0.0;
    const std::size_t n = pick ? pick->size() : s.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& x = s[pick ? (*pick)[i] : i];
        num += x.num;
        den += x.den;
    }
    return std::abs(num) / den;
}

/// Stream index reserved for bootstrap resampling; trajectory streams use
/// indices 0 .. n_traj-1.
inline constexpr std::uint64_t kBootstrapStream = 0xB0075A4D00000000ull;
inline constexpr std::size_t kBootstrapReplicates = 200;

inline double bootstrap_standard_error(const std::vector<RatioSample>& s, std::uint64_t master_seed)
{
    RandomStream stream(master_seed, kBootstrapStream);
    RealAccumulator acc;
    std::vector<std::size_t> pick(s.size());
    for (std::size_t b = 0; b < kBootstrapReplicates; ++b) {
        for (auto& p : pick) p = static_cast<std::size_t>(stream.uniform_index(s.size()));
        acc.add(ratio_of_means(s, &pick));
    }
    return acc.estimate().standard_error * std::sqrt(static_cast<double>(kBootstrapReplicates));
}

/// Ordered iso-factor references for each arm, from the event schedule.
struct ArmSequences {
    std::vector<IncrementRef> arm1;
    std::vector<IncrementRef> arm2;
};

inline ArmSequences arm_sequences(const InterferometerGeometry& g)
{
    ArmSequences out;
    for (const auto& e : touch_events(g)) (e.arm == Arm::One ? out.arm1 : out.arm2).push_back(e.ref);
    return out;
}

/// prod (I + sqrt(gamma) X(ref)) over one arm, later touches on the left.
inline Matrix2 arm_product(const std::vector<IncrementRef>& refs, const IncrementTable& fields, double gamma,
                           bool pauli)
{
    const double s = std::sqrt(gamma);
    Matrix2 u = Matrix2::Identity();
    for (const auto& r : refs) {
        const auto& c = fields.lookup(r);
        if (pauli) {
            u = (Matrix2::Identity() + s * iso_matrix(c)) * u;
        } else {
            u *= (1.0 + s * c[0]);
        }
    }
    return u;
}

} // namespace detail

/// Per-arm propagators of one trajectory of the propagating scenario.
/// K_F = P1 (x) U1 + P2 (x) U2; commuting fluctuations give scalar U.
struct ArmPropagators {
    Matrix2 u1;
    Matrix2 u2;
};

inline ArmPropagators propagate_arms(const InterferometerGeometry& g, const IncrementTable& fields, double gamma)
{
    const auto seq = detail::arm_sequences(g);
    const bool pauli = fields.kind() == FluctuationKind::Pauli;
    return {detail::arm_product(seq.arm1, fields, gamma, pauli), detail::arm_product(seq.arm2, fields, gamma, pauli)};
}

namespace detail {

inline SuppressionReport simulate_propagating(const Scenario& sc, const InterferometerGeometry& g,
                                              const DensityOperator& rho0, std::size_t n_traj, std::uint64_t master_seed,
                                              unsigned workers)
{
    require(!g.degenerate(), ErrorCode::InvalidArgument,
            "simulate_scenario_mc: propagating scenarios need a non-degenerate geometry (area > 0)");
    const FluctuationKind kind =
        sc.kind == ScenarioKind::PauliPropagating ? FluctuationKind::Pauli : FluctuationKind::Commuting;
    const bool pauli = kind == FluctuationKind::Pauli;
    const auto seq = arm_sequences(g);
    const double r11 = rho0(0, 0).real();
    const double r22 = rho0(1, 1).real();
    const Complex r12 = rho0(0, 1);

    std::vector<RatioSample> samples(n_traj);
    std::vector<Matrix2> iso(n_traj);
    parallel_for_index(n_traj, workers, [&](std::size_t i) {
        RandomStream stream(master_seed, i);
        const IncrementTable fields = generate_propagating_fields(g, kind, stream);
        const Matrix2 u1 = arm_product(seq.arm1, fields, sc.gamma, pauli);
        const Matrix2 u2 = arm_product(seq.arm2, fields, sc.gamma, pauli);
        // Joint state rho0 (x) I/2 evolves to sum_ab rho_ab |a><b| (x) U_a U_b^dag / 2.
        const Matrix2 w1 = u1 * u1.adjoint() * 0.5;
        const Matrix2 w2 = u2 * u2.adjoint() * 0.5;
        samples[i] = {r12 * (u1 * u2.adjoint()).trace() * 0.5, r11 * w1.trace().real() + r22 * w2.trace().real()};
        iso[i] = r11 * w1 + r22 * w2;
    });

    SuppressionReport r;
    r.method = ReportMethod::MonteCarlo;
    r.n_traj = n_traj;
    r.n_steps = g.n_steps;
    r.offdiag_ratio = ratio_of_means(samples, nullptr) / std::abs(r12);
    r.standard_error = bootstrap_standard_error(samples, master_seed) / std::abs(r12);

    if (pauli) {
        // Iso-reduced state W / tr W must be I/2: check W01 and (W00 - W11)
        // against zero with ratio-estimator standard errors.
        double tr = 0.0;
        Complex off{}, diff{};
        for (const auto& w : iso) {
            tr += w.trace().real();
            off += w(0, 1);
            diff += w(0, 0) - w(1, 1);
        }
        const auto n = static_cast<double>(n_traj);
        const Complex off_ratio = off / tr;
        const Complex diff_ratio = diff / tr;
        double ss_off = 0.0, ss_diff = 0.0;
        for (const auto& w : iso) {
            const double t = w.trace().real();
            ss_off += std::norm(w(0, 1) - off_ratio * t);
            ss_diff += std::norm(w(0, 0) - w(1, 1) - diff_ratio * t);
        }
        const double mean_tr = tr / n;
        const double se_off = std::sqrt(ss_off / (n - 1.0) / n) / mean_tr;
        const double se_diff = std::sqrt(ss_diff / (n - 1.0) / n) / mean_tr;
        IsoCheck c;
        c.max_deviation = std::max(std::abs(off_ratio), std::abs(diff_ratio));
        c.standard_error = std::max(se_off, se_diff);
        c.passed = within_standard_errors(off_ratio, se_off) && within_standard_errors(diff_ratio, se_diff);
        r.iso_check = c;
    }
    return r;
}

inline SuppressionReport simulate_delta(const Scenario& sc, const InterferometerGeometry& g,
                                        const DensityOperator& rho0, std::size_t n_traj, std::uint64_t master_seed,
                                        unsigned workers)
{
    const double gt = sc.gamma * g.T;
    const std::size_t steps = std::max<std::size_t>(g.n_steps, static_cast<std::size_t>(std::ceil(gt / 1e-3)));
    const auto model = projector_dephasing_model(sc.gamma);
    const auto traj = run_linear_qsd(model, rho0, g.T, steps, n_traj, master_seed, workers);
    std::vector<RatioSample> samples(n_traj);
    for (std::size_t i = 0; i < n_traj; ++i)
        samples[i] = {traj[i].vec(0) * std::conj(traj[i].vec(1)), traj[i].weight()};
    const double r12 = std::abs(rho0(0, 1));
    SuppressionReport r;
    r.method = ReportMethod::MonteCarlo;
    r.n_traj = n_traj;
    r.n_steps = steps;
    r.offdiag_ratio = ratio_of_means(samples, nullptr) / r12;
    r.standard_error = bootstrap_standard_error(samples, master_seed) / r12;
    return r;
}

} // namespace detail

/// Monte Carlo off-diagonal ratio |rho12(T)| / |rho12(0)| with a bootstrap
/// standard error. Trajectory i draws from RandomStream(master_seed, i).
/// Delta fluctuations run linear state diffusion with L = sqrt(gamma) P1,
/// sqrt(gamma) P2; propagating scenarios evolve the fluctuation propagator
/// over the event schedule and trace out the iso space.
inline SuppressionReport simulate_scenario_mc(const Scenario& sc, const InterferometerGeometry& g,
                                              const DensityOperator& rho0, std::size_t n_traj,
                                              std::uint64_t master_seed, unsigned workers = 0)
{
    require(n_traj >= 100, ErrorCode::InvalidArgument, "simulate_scenario_mc: n_traj must be >= 100");
    require(rho0.dim() == 2, ErrorCode::DimensionMismatch, "simulate_scenario_mc: rho0 must be 2x2 (two arms)");
    require(std::abs(rho0(0, 1)) > 0.0, ErrorCode::UndefinedReference, "off-diagonal reference undefined");
    if (sc.kind == ScenarioKind::DeltaFluctuations) return detail::simulate_delta(sc, g, rho0, n_traj, master_seed, workers);
    return detail::simulate_propagating(sc, g, rho0, n_traj, master_seed, workers);
}

} // namespace stfluct
