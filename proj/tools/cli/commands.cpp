#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "report.hpp"
#include "stfluct/stfluct.hpp"

namespace stfluct::cli {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::uint64_t kDefaultSeed = 1;

/// A usage or configuration problem: exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::uint64_t seed = kDefaultSeed;
    std::string config_path;
    std::string format = "json";
    std::string out_path;
};

void add_common(CLI::App* app, CommonOptions& c)
{
    app->add_option("--seed", c.seed, "Master seed (u64)");
    app->add_option("--config", c.config_path, "Flat JSON object of option values; flags override it");
    app->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
    app->add_option("--out", c.out_path, "Write the report to this file instead of stdout");
}

std::string json_scalar_to_arg(const std::string& key, const nlohmann::json& v)
{
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    throw UsageError("config key '" + key + "' must be a string, number or boolean");
}

/// Fills options that were not given on the command line from the config
/// file. Unknown keys and values that fail conversion are usage errors.
void apply_config(CLI::App* app, const std::string& path)
{
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) throw UsageError("config file must hold a flat JSON object");
    for (const auto& [key, value] : cfg.items()) {
        if (key == "config") throw UsageError("config key 'config' is not allowed");
        CLI::Option* opt = app->get_option_no_throw("--" + key);
        if (!opt) throw UsageError("unknown config key '" + key + "' for command '" + app->get_name() + "'");
        if (opt->count() > 0) continue;
        try {
            opt->add_result(json_scalar_to_arg(key, value));
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError("config key '" + key + "': " + e.what());
        }
    }
}

/// Converts library precondition failures into usage errors so that nothing
/// runs on an invalid configuration.
template <typename F>
auto validated(F&& f)
{
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::DimensionMismatch ||
            e.code() == ErrorCode::OutsideValidity)
            throw UsageError(e.what());
        throw;
    }
}

DensityOperator even_superposition() { return DensityOperator::normalize(ComplexOperator{{1.0, 1.0}, {1.0, 1.0}}); }

// ---------------------------------------------------------------- eta

struct EtaOptions {
    std::string kind = "pauli";
    std::size_t samples = 100000;
};

Report cmd_eta(const EtaOptions& o, const CommonOptions& c)
{
    const FluctuationKind kind = validated([&] { return parse_fluctuation_kind(o.kind); });
    if (o.samples < 100) throw UsageError("--samples must be >= 100");

    Report r;
    r.command = "eta";
    r.seed = c.seed;
    r.config = {{"kind", o.kind}, {"samples", o.samples}, {"dt", 1.0}};
    r.samples = {{"eta", o.samples}};

    const auto exact = exchange_mean_algebraic(kind);
    r.add("eta_exact", exact.eta);
    if (kind == FluctuationKind::Pauli) {
        const auto sum = pauli_exchange_sum();
        r.add("pauli_exchange_sum_identity_coefficient", (sum.trace() / 2.0).real());
        const bool is_minus_3 = sum.max_abs_diff(ComplexOperator::identity(2) * Complex(-3.0)) <= 1e-12;
        r.check("pauli_exchange_sum_equals_minus_3I", sum.max_abs_diff(ComplexOperator::identity(2) * Complex(-3.0)), 0.0,
                std::nullopt, is_minus_3);
    }
    RandomStream stream(c.seed, 0);
    const auto mc = exchange_mean_mc(kind, o.samples, 1.0, stream);
    r.check("eta_mc", mc.eta, exact.eta, mc.standard_error,
            within_standard_errors(mc.eta - exact.eta, mc.standard_error));
    return r;
}

// ---------------------------------------------------------------- interferometer

struct InterferometerOptions {
    std::string scenario = "pauli";
    std::optional<double> gamma, gamma_t, gamma2_area;
    double t = 1.0;
    double x_max = 0.05;
    std::size_t steps = 200;
    std::size_t traj = 10000;
    bool verify = false;
};

Report cmd_interferometer(const InterferometerOptions& o, const CommonOptions& c)
{
    const ScenarioKind kind = validated([&] { return parse_scenario_kind(o.scenario); });
    const int given = (o.gamma ? 1 : 0) + (o.gamma_t ? 1 : 0) + (o.gamma2_area ? 1 : 0);
    if (given > 1) throw UsageError("give at most one of --gamma, --gamma-t, --gamma2-area");
    const auto geometry = validated([&] { return make_triangle_geometry(o.t, o.x_max, o.steps); });
    if (o.traj < 100) throw UsageError("--traj must be >= 100");

    double gamma = 0.0;
    std::string gamma_source;
    if (o.gamma) {
        gamma = *o.gamma;
        gamma_source = "gamma";
    } else if (o.gamma_t) {
        gamma = *o.gamma_t / geometry.T;
        gamma_source = "gamma-t";
    } else {
        const double g2a = o.gamma2_area.value_or(kind == ScenarioKind::DeltaFluctuations ? 0.0 : 0.001);
        if (kind == ScenarioKind::DeltaFluctuations && !o.gamma2_area) {
            gamma = 0.5 / geometry.T;
            gamma_source = "default gamma-t 0.5";
        } else {
            if (geometry.degenerate()) throw UsageError("--gamma2-area needs x-max > 0");
            if (g2a < 0.0) throw UsageError("--gamma2-area must be >= 0");
            gamma = std::sqrt(g2a / geometry.area);
            gamma_source = o.gamma2_area ? "gamma2-area" : "default gamma2-area 0.001";
        }
    }
    const Scenario scenario = validated([&] { return Scenario(kind, gamma); });
    if (scenario.propagating() && geometry.degenerate())
        throw UsageError("propagating scenarios need x-max > 0 (area > 0)");

    Report r;
    r.command = "interferometer";
    r.seed = c.seed;
    r.config = {{"scenario", o.scenario}, {"gamma", gamma},         {"gamma_source", gamma_source},
                {"t", o.t},               {"x-max", o.x_max},       {"steps", o.steps},
                {"traj", o.traj},         {"verify", o.verify},     {"area", geometry.area},
                {"gamma_t", gamma * geometry.T}, {"gamma2_area", gamma * gamma * geometry.area}};
    r.samples = {{"trajectories", o.traj}};

    std::optional<double> analytic;
    std::string analytic_note;
    try {
        analytic = suppression_analytic(scenario, geometry).offdiag_ratio;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::OutsideValidity) throw;
        analytic_note = e.what();
    }
    r.add("analytic_ratio", analytic).note = analytic_note;

    if (scenario.propagating()) {
        const double eta = exchange_mean_algebraic(kind == ScenarioKind::PauliPropagating ? FluctuationKind::Pauli
                                                                                          : FluctuationKind::Commuting)
                               .eta;
        const auto sums = oracle_characteristic_sums(geometry, geometry.n_steps, eta);
        r.check("oracle_coeff_rho0", sums.coeff_rho0, 2.0 * geometry.T * geometry.T, std::nullopt,
                std::abs(sums.coeff_rho0 - 2.0 * geometry.T * geometry.T) <= 0.02 * 2.0 * geometry.T * geometry.T);
        r.add("oracle_coeff_od", sums.coeff_od).reference = 2.0 * geometry.area * (eta - 1.0);
        r.add("oracle_ratio", 1.0 + gamma * gamma * sums.coeff_od);
    }

    const auto mc = simulate_scenario_mc(scenario, geometry, even_superposition(), o.traj, c.seed);
    r.samples["steps"] = mc.n_steps;
    Row& row = r.add("mc_ratio", mc.offdiag_ratio);
    row.standard_error = mc.standard_error;
    row.reference = analytic;
    if (o.verify) {
        row.passed = analytic && within_standard_errors(mc.offdiag_ratio - *analytic, mc.standard_error);
        if (!analytic) row.note = "no analytic reference to verify against";
    }
    if (mc.iso_check)
        r.check("iso_state_proportional_to_identity", mc.iso_check->max_deviation, 0.0, mc.iso_check->standard_error,
                mc.iso_check->passed);
    return r;
}

// ---------------------------------------------------------------- bounds

struct BoundsOptions {
    std::string preset;
    std::string scenario;
    std::optional<int> a;
    std::optional<double> t, area, epsilon, tau0;
};

Report cmd_bounds(const BoundsOptions& o, const CommonOptions& c, int& exit_code)
{
    BoundsInput base;
    if (!o.preset.empty()) {
        if (o.preset != "kasevich-chu") throw UsageError("unknown preset '" + o.preset + "'");
        base = preset_kasevich_chu();
    } else {
        if (!o.a || !o.t) throw UsageError("without --preset, --a and --t are required");
    }
    if (o.a) base.atomic_number = *o.a;
    if (o.t) base.drift_time = *o.t;
    if (o.area) base.area = *o.area;
    if (o.epsilon) base.threshold = *o.epsilon;

    std::vector<ScenarioKind> kinds;
    if (o.scenario.empty()) {
        kinds = {ScenarioKind::DeltaFluctuations, ScenarioKind::PauliPropagating};
    } else {
        kinds = {validated([&] { return parse_scenario_kind(o.scenario); })};
    }
    for (auto k : kinds) {
        BoundsInput in = base;
        in.scenario = k;
        if (k != ScenarioKind::CommutingPropagating) validated([&] { in.validate(); return 0; });
    }
    const PhysicalConstants constants;
    const double tau0 = o.tau0.value_or(constants.planck_time);
    if (tau0 < 0.0) throw UsageError("--tau0 must be >= 0");

    Report r;
    r.command = "bounds";
    r.seed = c.seed;
    r.config = {{"preset", o.preset},       {"scenario", o.scenario.empty() ? "delta,pauli" : o.scenario},
                {"a", base.atomic_number}, {"t", base.drift_time},
                {"area", base.area},       {"epsilon", base.threshold},
                {"tau0", tau0},            {"hbar", constants.hbar},
                {"u_c2", constants.atomic_mass_unit_energy}};

    r.add("gamma_at_tau0", decoherence_rate(base.atomic_number, tau0, constants));
    for (auto k : kinds) {
        BoundsInput in = base;
        in.scenario = k;
        const std::string name = "tau0_bound_" + std::string(to_string(k));
        try {
            const double b = tau0_bound(in, constants);
            r.add(name, b);
            r.check(name + "_below_planck_time", b, constants.planck_time, std::nullopt, b < constants.planck_time);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoBound) throw;
            r.add(name, std::nullopt).note = e.what();
            exit_code = kExitCheckFailed;
        }
    }
    return r;
}

// ---------------------------------------------------------------- verify

struct VerifyOptions {
    bool quick = false;
};

Report cmd_verify(const VerifyOptions& o, const CommonOptions& c)
{
    const bool q = o.quick;
    const std::size_t n_scalar = q ? 100000 : 1000000;
    const std::size_t n_pauli = q ? 20000 : 100000;
    const std::size_t n_qsd = q ? 2000 : 10000;
    const std::size_t n_null = q ? 500 : 2000;
    const std::size_t n_triangle = q ? 5000 : 20000;

    Report r;
    r.command = "verify";
    r.seed = c.seed;
    r.config = {{"quick", q}};
    r.samples = {{"moments_scalar", n_scalar},      {"moments_pauli", n_pauli},   {"eta", n_pauli},
                 {"unraveling_trajectories", n_qsd}, {"commuting_trajectories", n_null},
                 {"pauli_trajectories", n_triangle}};

    std::uint64_t stream_index = 0;
    auto next_stream = [&] { return RandomStream(c.seed, stream_index++); };

    // Moments and unbalanced means.
    for (auto kind : {FluctuationKind::Commuting, FluctuationKind::Pauli}) {
        auto s = next_stream();
        const auto checks = moment_suite(kind, kind == FluctuationKind::Pauli ? n_pauli : n_scalar, 1e-2, s);
        for (const auto& m : checks) {
            const Complex dev = m.estimate - m.expected;
            r.check("moment_" + std::string(to_string(kind)) + "_" + m.name, std::abs(dev), 0.0, m.standard_error,
                    m.passed);
        }
    }

    // Exchange constant.
    {
        const auto sum = pauli_exchange_sum();
        const double dev = sum.max_abs_diff(ComplexOperator::identity(2) * Complex(-3.0));
        r.check("pauli_exchange_sum_equals_minus_3I", dev, 0.0, std::nullopt, dev <= 1e-12);
        const auto exact = exchange_mean_algebraic(FluctuationKind::Pauli);
        r.check("eta_pauli_algebraic", exact.eta, -1.0 / 3.0, std::nullopt, std::abs(exact.eta + 1.0 / 3.0) < 1e-12);
        for (auto kind : {FluctuationKind::Commuting, FluctuationKind::Pauli}) {
            auto s = next_stream();
            const auto mc = exchange_mean_mc(kind, n_pauli, 1.0, s);
            const double ref = exchange_mean_algebraic(kind).eta;
            r.check("eta_mc_" + std::string(to_string(kind)), mc.eta, ref, mc.standard_error,
                    within_standard_errors(mc.eta - ref, mc.standard_error));
        }
    }

    // Unraveling equivalence.
    {
        const double gamma = 1.0;
        const auto model = projector_dephasing_model(gamma);
        const auto rho0 = even_superposition();
        for (double gt : {0.5, 1.0}) {
            const double t = gt / gamma;
            const auto exact = evolve_master(rho0, model, t, 1e-3);
            const double rel = std::abs(exact(0, 1).real() - 0.5 * std::exp(-gt)) / (0.5 * std::exp(-gt));
            char tag[32];
            std::snprintf(tag, sizeof tag, "gt%.1f", gt);
            r.check(std::string("master_offdiag_closed_form_") + tag, rel, 0.0, std::nullopt, rel < 1e-8);
            const auto steps = static_cast<std::size_t>(std::ceil(gt / 1e-3));
            const auto traj = run_linear_qsd(model, rho0, t, steps, n_qsd, c.seed ^ (0x5D5Dull + stream_index++));
            const auto est = ensemble_density(traj);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    const Complex dev = est.rho(a, b) - exact(a, b);
                    const double se = est.per_entry_standard_error(a, b);
                    r.check("unraveling_" + std::string(tag) + "_rho" + std::to_string(a + 1) + std::to_string(b + 1),
                            est.rho(a, b).real(), exact(a, b).real(), se, within_standard_errors(dev, se));
                }
        }
    }

    // Propagating scenarios on a small triangle. The Pauli comparison runs
    // deep in the perturbative regime, where the neglected higher orders stay
    // well below the Monte Carlo resolution.
    const auto geometry = make_triangle_geometry(1.0, 0.02, 200);
    {
        const Scenario commuting(ScenarioKind::CommutingPropagating, std::sqrt(0.1 / geometry.area));
        const auto mc = simulate_scenario_mc(commuting, geometry, even_superposition(), n_null, c.seed + 101);
        r.check("commuting_null_result", mc.offdiag_ratio, 1.0, mc.standard_error,
                within_standard_errors(mc.offdiag_ratio - 1.0, mc.standard_error));
    }
    {
        const Scenario pauli(ScenarioKind::PauliPropagating, std::sqrt(1e-4 / geometry.area));
        const double analytic = suppression_analytic(pauli, geometry).offdiag_ratio;
        const double oracle = suppression_oracle(pauli, geometry, geometry.n_steps).offdiag_ratio;
        const double tol = 5.0 * geometry.dt() / geometry.T;
        r.check("pauli_oracle_vs_analytic", oracle, analytic, std::nullopt, std::abs(oracle - analytic) < tol);
        const auto mc = simulate_scenario_mc(pauli, geometry, even_superposition(), n_triangle, c.seed + 202);
        r.check("pauli_mc_vs_analytic", mc.offdiag_ratio, analytic, mc.standard_error,
                within_standard_errors(mc.offdiag_ratio - analytic, mc.standard_error));
        r.check("pauli_iso_state_proportional_to_identity", mc.iso_check->max_deviation, 0.0,
                mc.iso_check->standard_error, mc.iso_check->passed);
    }

    // Bounds consistency.
    {
        const PhysicalConstants k;
        for (auto kind : {ScenarioKind::DeltaFluctuations, ScenarioKind::PauliPropagating}) {
            const auto in = preset_kasevich_chu(kind);
            const double b = tau0_bound(in, k);
            const double gamma = decoherence_rate(in.atomic_number, b, k);
            const double achieved = kind == ScenarioKind::DeltaFluctuations ? gamma * in.drift_time
                                                                            : 8.0 / 3.0 * gamma * gamma * in.area;
            const std::string name(to_string(kind));
            r.check("bounds_saturation_" + name, achieved, in.threshold, std::nullopt,
                    std::abs(achieved - in.threshold) <= 1e-12 * in.threshold);
            r.check("bounds_below_planck_time_" + name, b, k.planck_time, std::nullopt, b < k.planck_time);
        }
    }
    return r;
}

void emit(const Report& r, const CommonOptions& c, std::ostream& out)
{
    std::ostringstream buf;
    if (c.format == "csv") {
        write_csv(buf, r, kVersion);
    } else {
        write_json(buf, r, kVersion);
    }
    if (c.out_path.empty()) {
        out << buf.str();
        return;
    }
    std::ofstream f(c.out_path, std::ios::binary);
    if (!f) throw UsageError("cannot open output file '" + c.out_path + "'");
    f << buf.str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app("Space-time fluctuation decoherence toolkit", "stfluct");
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonOptions common;

    EtaOptions eta;
    auto* eta_cmd = app.add_subcommand("eta", "Exchange constant: algebraic value and Monte Carlo estimate");
    add_common(eta_cmd, common);
    eta_cmd->add_option("--kind", eta.kind, "Fluctuation kind")->check(CLI::IsMember({"pauli", "commuting"}));
    eta_cmd->add_option("--samples", eta.samples, "Monte Carlo sample pairs");

    InterferometerOptions itf;
    auto* itf_cmd = app.add_subcommand("interferometer", "Off-diagonal suppression in the two-arm interferometer");
    add_common(itf_cmd, common);
    itf_cmd->add_option("--scenario", itf.scenario, "delta, commuting or pauli")
        ->check(CLI::IsMember({"delta", "commuting", "pauli"}));
    itf_cmd->add_option("--gamma", itf.gamma, "Decoherence rate gamma");
    itf_cmd->add_option("--gamma-t", itf.gamma_t, "gamma * T");
    itf_cmd->add_option("--gamma2-area", itf.gamma2_area, "gamma^2 * area");
    itf_cmd->add_option("--t", itf.t, "Drift time T");
    itf_cmd->add_option("--x-max", itf.x_max, "Maximum arm separation (time units, c = 1)");
    itf_cmd->add_option("--steps", itf.steps, "Grid steps");
    itf_cmd->add_option("--traj", itf.traj, "Monte Carlo trajectories");
    itf_cmd->add_flag("--verify", itf.verify, "Exit 1 when Monte Carlo and analytic disagree beyond 3 SE");

    BoundsOptions bnd;
    auto* bnd_cmd = app.add_subcommand("bounds", "Upper bounds on tau0 from a maximum observed suppression");
    add_common(bnd_cmd, common);
    bnd_cmd->add_option("--preset", bnd.preset, "Input preset")->check(CLI::IsMember({"kasevich-chu"}));
    bnd_cmd->add_option("--scenario", bnd.scenario, "delta, commuting or pauli (default: delta and pauli)")
        ->check(CLI::IsMember({"delta", "commuting", "pauli"}));
    bnd_cmd->add_option("--a", bnd.a, "Atomic mass number A");
    bnd_cmd->add_option("--t", bnd.t, "Drift time T [s]");
    bnd_cmd->add_option("--area", bnd.area, "Enclosed area [s^2]");
    bnd_cmd->add_option("--epsilon", bnd.epsilon, "Suppression threshold");
    bnd_cmd->add_option("--tau0", bnd.tau0, "tau0 for the reported gamma [s] (default: Planck time)");

    VerifyOptions ver;
    auto* ver_cmd = app.add_subcommand("verify", "Run the built-in verification suite");
    add_common(ver_cmd, common);
    ver_cmd->add_flag("--quick", ver.quick, "Reduced sample counts");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    CLI::App* cmd = app.get_subcommands().front();
    try {
        apply_config(cmd, common.config_path);
        int exit_code = kExitOk;
        Report report;
        if (cmd == eta_cmd) report = cmd_eta(eta, common);
        else if (cmd == itf_cmd) report = cmd_interferometer(itf, common);
        else if (cmd == bnd_cmd) report = cmd_bounds(bnd, common, exit_code);
        else report = cmd_verify(ver, common);

        emit(report, common, out);
        if (!report.all_passed()) {
            for (const auto& row : report.rows)
                if (row.passed && !*row.passed) err << "check failed: " << row.name << '\n';
            exit_code = kExitCheckFailed;
        }
        for (const auto& row : report.rows)
            if (!row.value && !row.note.empty()) err << row.name << ": " << row.note << '\n';
        return exit_code;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
}

} // namespace stfluct::cli
