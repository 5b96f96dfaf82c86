#pragma once

// Linear Markovian state diffusion and the equivalent Lindblad master equation.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stfluct/core.hpp"
#include "stfluct/error.hpp"
#include "stfluct/fluctuations.hpp"
#include "stfluct/parallel.hpp"
#include "stfluct/random.hpp"
#include "stfluct/stats.hpp"

namespace stfluct {

/// H and the L_j of the linear state diffusion equation. Time independent.
struct LindbladModel {
    ComplexOperator hamiltonian;
    std::vector<ComplexOperator> lindblads;
    double hbar = 1.0;

    LindbladModel(ComplexOperator h, std::vector<ComplexOperator> ls, double hbar_value = 1.0)
        : hamiltonian(std::move(h)), lindblads(std::move(ls)), hbar(hbar_value)
    {
        require(hamiltonian.is_hermitian(1e-12), ErrorCode::InvalidArgument, "LindbladModel: H must be Hermitian");
        require(hbar > 0.0, ErrorCode::InvalidArgument, "LindbladModel: hbar must be positive");
        for (const auto& l : lindblads)
            require(l.dim() == hamiltonian.dim(), ErrorCode::DimensionMismatch,
                    "LindbladModel: all operators must share one dimension");
    }

    int dim() const noexcept { return hamiltonian.dim(); }

    /// sum_j L_j^dag L_j
    ComplexOperator lindblad_gram() const
    {
        Matrix g = Matrix::Zero(dim(), dim());
        for (const auto& l : lindblads) g += l.matrix().adjoint() * l.matrix();
        return ComplexOperator(std::move(g));
    }
};

/// Two-arm dephasing model: H = 0, L = {sqrt(gamma) P1, sqrt(gamma) P2}.
inline LindbladModel projector_dephasing_model(double gamma)
{
    require(gamma >= 0.0, ErrorCode::InvalidArgument, "projector_dephasing_model: gamma must be >= 0");
    const double s = std::sqrt(gamma);
    return LindbladModel(ComplexOperator::zero(2),
                         {ComplexOperator{{s, 0.0}, {0.0, 0.0}}, ComplexOperator{{0.0, 0.0}, {0.0, s}}});
}

/// Self-adjoint part of the drift fixed by trace conservation:
/// -1/2 sum_j L_j^dag L_j. The skew part is -H/hbar.
inline ComplexOperator drift_from_trace_condition(const LindbladModel& model)
{
    return model.lindblad_gram() * Complex(-0.5);
}

/// One Euler-Maruyama step of the linear equation,
///   psi += [-(i/hbar) H dt - 1/2 sum L^dag L dt + sum_j L_j dxi_j] psi,
/// with no renormalization.
inline TrajectoryState step_linear_qsd(const TrajectoryState& state, const LindbladModel& model, double dt,
                                       std::span<const ScalarIncrement> increments)
{
    require(increments.size() == model.lindblads.size(), ErrorCode::InvalidArgument,
            "step_linear_qsd: need exactly one increment per Lindblad operator");
    require(dt > 0.0, ErrorCode::InvalidArgument, "step_linear_qsd: dt must be positive");
    require(state.dim() == model.dim(), ErrorCode::DimensionMismatch, "step_linear_qsd: state dimension mismatch");

    const Matrix drift = (-kI / model.hbar) * model.hamiltonian.matrix() * dt +
                         drift_from_trace_condition(model).matrix() * dt;
    Vector next = state.vec + drift * state.vec;
    for (std::size_t j = 0; j < increments.size(); ++j)
        next += increments[j].value * (model.lindblads[j].matrix() * state.vec);
    return TrajectoryState(std::move(next));
}

namespace detail {

inline Matrix lindblad_rhs(const LindbladModel& model, const Matrix& gram, const Matrix& rho)
{
    const Matrix& h = model.hamiltonian.matrix();
    Matrix out = (-kI / model.hbar) * (h * rho - rho * h);
    out -= 0.5 * (gram * rho + rho * gram);
    for (const auto& l : model.lindblads) out += l.matrix() * rho * l.matrix().adjoint();
    return out;
}

} // namespace detail

/// One classical RK4 step of the Lindblad master equation. The result is
/// re-Hermitized to remove round-off asymmetry and carries no trace check.
inline DensityOperator step_master(const DensityOperator& rho, const LindbladModel& model, double dt)
{
    require(dt > 0.0, ErrorCode::InvalidArgument, "step_master: dt must be positive");
    require(rho.dim() == model.dim(), ErrorCode::DimensionMismatch, "step_master: dimension mismatch");
    const Matrix gram = model.lindblad_gram().matrix();
    const Matrix& r = rho.op().matrix();
    const Matrix k1 = detail::lindblad_rhs(model, gram, r);
    const Matrix k2 = detail::lindblad_rhs(model, gram, r + 0.5 * dt * k1);
    const Matrix k3 = detail::lindblad_rhs(model, gram, r + 0.5 * dt * k2);
    const Matrix k4 = detail::lindblad_rhs(model, gram, r + dt * k3);
    Matrix next = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    next = 0.5 * (next + Matrix(next.adjoint()));
    return DensityOperator(ComplexOperator(std::move(next)), false);
}

/// Integrates the master equation over [0, t_final] with fixed steps no
/// longer than max_dt.
inline DensityOperator evolve_master(const DensityOperator& rho0, const LindbladModel& model, double t_final,
                                     double max_dt)
{
    require(t_final >= 0.0 && max_dt > 0.0, ErrorCode::InvalidArgument, "evolve_master: bad time arguments");
    const auto steps = static_cast<std::size_t>(std::ceil(t_final / max_dt));
    DensityOperator rho(rho0.op(), false);
    if (steps == 0) return rho;
    const double dt = t_final / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) rho = step_master(rho, model, dt);
    return rho;
}

struct EnsembleEstimate {
    DensityOperator rho;
    std::size_t n_trajectories = 0;
    /// Standard error of each entry of the trace-normalized estimate,
    /// complex entries combining real and imaginary parts.
    Eigen::MatrixXd per_entry_standard_error;
    /// Mean trajectory weight <psi|psi> with its standard error.
    RealEstimate mean_weight;
};

/// rho_raw = (1/N) sum |psi><psi|, returned normalized by its trace.
/// Standard errors are for the ratio estimator entry / trace (delta method
/// on the per-trajectory residuals).
inline EnsembleEstimate ensemble_density(std::span<const TrajectoryState> trajectories)
{
    require(!trajectories.empty(), ErrorCode::InvalidArgument, "ensemble_density: empty trajectory list");
    const int d = trajectories.front().dim();
    for (const auto& t : trajectories)
        require(t.dim() == d, ErrorCode::DimensionMismatch, "ensemble_density: trajectories differ in dimension");

    const auto n = static_cast<double>(trajectories.size());
    Matrix raw = Matrix::Zero(d, d);
    RealAccumulator weight;
    for (const auto& t : trajectories) {
        raw += t.vec * t.vec.adjoint();
        weight.add(t.weight());
    }
    raw /= n;
    const double tr = raw.trace().real();
    require(tr > 0.0, ErrorCode::InvalidArgument, "ensemble_density: zero total weight");
    const Matrix ratio = raw / tr;

    Eigen::MatrixXd se = Eigen::MatrixXd::Zero(d, d);
    if (trajectories.size() > 1) {
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) {
                double ss = 0.0;
                for (const auto& t : trajectories) {
                    const Complex x = t.vec(r) * std::conj(t.vec(c));
                    ss += std::norm(x - ratio(r, c) * t.weight());
                }
                se(r, c) = std::sqrt(ss / (n - 1.0) / n) / tr;
            }
    }
    return {DensityOperator::normalize(ComplexOperator(raw)), trajectories.size(), se, weight.estimate()};
}

/// Pure initial state for a trajectory whose ensemble reproduces rho0: an
/// eigenvector of rho0 picked with probability equal to its eigenvalue.
inline Vector sample_initial_state(const DensityOperator& rho0, RandomStream& stream)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho0.op().matrix());
    const Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
    const double total = w.sum();
    double u = stream.uniform() * total;
    Eigen::Index pick = w.size() - 1;
    for (Eigen::Index k = w.size() - 1; k >= 0; --k) {
        if (w(k) <= 0.0) continue;
        pick = k;
        if (u < w(k)) break;
        u -= w(k);
    }
    return es.eigenvectors().col(pick) * std::sqrt(total);
}

/// Runs n_traj independent linear trajectories over [0, t_final] with
/// n_steps Euler-Maruyama steps. Trajectory i uses RandomStream(master_seed, i).
inline std::vector<TrajectoryState> run_linear_qsd(const LindbladModel& model, const DensityOperator& rho0,
                                                   double t_final, std::size_t n_steps, std::size_t n_traj,
                                                   std::uint64_t master_seed, unsigned workers = 0)
{
    require(n_steps > 0 && t_final > 0.0, ErrorCode::InvalidArgument, "run_linear_qsd: bad time grid");
    require(rho0.dim() == model.dim(), ErrorCode::DimensionMismatch, "run_linear_qsd: dimension mismatch");
    const double dt = t_final / static_cast<double>(n_steps);
    std::vector<TrajectoryState> out(n_traj);
    parallel_for_index(n_traj, workers, [&](std::size_t i) {
        RandomStream stream(master_seed, i);
        TrajectoryState psi(sample_initial_state(rho0, stream));
        std::vector<ScalarIncrement> inc(model.lindblads.size());
        for (std::size_t s = 0; s < n_steps; ++s) {
            for (auto& x : inc) x = sample_scalar(stream, dt);
            psi = step_linear_qsd(psi, model, dt, inc);
        }
        out[i] = std::move(psi);
    });
    return out;
}

} // namespace stfluct
