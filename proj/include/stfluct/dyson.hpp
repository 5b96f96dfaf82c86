#pragma once

// Time-ordered propagators on a discrete grid, the Dyson terms K^(n), the
// second-order fluctuation density and the drift fixed by the trace condition.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stfluct/core.hpp"
#include "stfluct/error.hpp"
#include "stfluct/fluctuations.hpp"
#include "stfluct/parallel.hpp"
#include "stfluct/random.hpp"
#include "stfluct/stats.hpp"

namespace stfluct {

/// Names one fluctuation sample: field id and integer time index.
struct IncrementRef {
    int field = 0;
    std::int64_t index = 0;

    auto operator<=>(const IncrementRef&) const = default;
};

/// op (x) dxi(ref) on system (x) iso space. For commuting fluctuations the
/// iso factor is the scalar dxi.
struct ScheduleTerm {
    ComplexOperator op;
    IncrementRef ref;
};

/// dF(t_k) = sum over the terms of step k. Steps are listed in time order.
/// An optional drift D contributes D dt to every step.
struct FluctuationSchedule {
    double dt = 0.0;
    std::vector<std::vector<ScheduleTerm>> steps;
    std::optional<ComplexOperator> drift;

    std::size_t n_steps() const noexcept { return steps.size(); }

    /// System-space dimension, taken from the first operator found.
    int system_dim() const
    {
        if (drift) return drift->dim();
        for (const auto& s : steps)
            if (!s.empty()) return s.front().op.dim();
        throw Error(ErrorCode::InvalidArgument, "FluctuationSchedule: no operators");
    }

    /// How often each sample is referenced across the schedule.
    std::map<IncrementRef, int> reference_counts() const
    {
        std::map<IncrementRef, int> out;
        for (const auto& s : steps)
            for (const auto& t : s) ++out[t.ref];
        return out;
    }

    /// Positive dt, one common dimension, and no sample used more than twice.
    void validate() const
    {
        require(dt > 0.0, ErrorCode::InvalidArgument, "FluctuationSchedule: dt must be positive");
        const int d = system_dim();
        for (const auto& s : steps)
            for (const auto& t : s)
                require(t.op.dim() == d, ErrorCode::DimensionMismatch, "FluctuationSchedule: operator dimension mismatch");
        for (const auto& [ref, count] : reference_counts())
            require(count <= 2, ErrorCode::InvalidArgument,
                    "FluctuationSchedule: sample (" + std::to_string(ref.field) + ", " + std::to_string(ref.index) +
                        ") referenced " + std::to_string(count) + " times; at most twice allowed");
    }
};

/// Generated fluctuation samples, one contiguous index range per field.
/// Commuting samples use component 0 only.
class IncrementTable {
public:
    struct Field {
        std::int64_t first_index = 0;
        std::vector<std::array<Complex, 3>> values;
    };

    explicit IncrementTable(FluctuationKind kind) : kind_(kind) {}

    FluctuationKind kind() const noexcept { return kind_; }
    const std::vector<Field>& fields() const noexcept { return fields_; }

    /// Installs (or replaces) field `id` with explicit values.
    void set_field(int id, std::int64_t first_index, std::vector<std::array<Complex, 3>> values)
    {
        require(id >= 0, ErrorCode::InvalidArgument, "IncrementTable: field id must be >= 0");
        if (fields_.size() <= static_cast<std::size_t>(id)) fields_.resize(static_cast<std::size_t>(id) + 1);
        fields_[static_cast<std::size_t>(id)] = {first_index, std::move(values)};
    }

    /// Draws count samples of variance dt for indices first_index.. of field id.
    void generate_field(int id, std::int64_t first_index, std::size_t count, double dt, RandomStream& stream)
    {
        std::vector<std::array<Complex, 3>> v(count);
        for (auto& s : v) draw(s, dt, stream);
        set_field(id, first_index, std::move(v));
    }

    /// Samples for every reference in the schedule, fields in id order and
    /// indices ascending within a field.
    static IncrementTable for_schedule(const FluctuationSchedule& schedule, FluctuationKind kind, RandomStream& stream)
    {
        std::map<int, std::pair<std::int64_t, std::int64_t>> range;
        for (const auto& s : schedule.steps)
            for (const auto& t : s) {
                auto [it, fresh] = range.try_emplace(t.ref.field, t.ref.index, t.ref.index);
                if (!fresh) {
                    it->second.first = std::min(it->second.first, t.ref.index);
                    it->second.second = std::max(it->second.second, t.ref.index);
                }
            }
        IncrementTable table(kind);
        for (const auto& [id, r] : range)
            table.generate_field(id, r.first, static_cast<std::size_t>(r.second - r.first + 1), schedule.dt, stream);
        return table;
    }

    const std::array<Complex, 3>& lookup(const IncrementRef& ref) const
    {
        const bool ok_field = ref.field >= 0 && static_cast<std::size_t>(ref.field) < fields_.size();
        if (ok_field) {
            const Field& f = fields_[static_cast<std::size_t>(ref.field)];
            const std::int64_t off = ref.index - f.first_index;
            if (off >= 0 && static_cast<std::size_t>(off) < f.values.size()) return f.values[static_cast<std::size_t>(off)];
        }
        throw Error(ErrorCode::UnresolvedReference, "IncrementTable: unresolved reference (field " +
                                                        std::to_string(ref.field) + ", index " +
                                                        std::to_string(ref.index) + ")");
    }

    /// Iso-space dimension of the joint space: 2 for Pauli, 1 for commuting.
    int iso_dim() const noexcept { return kind_ == FluctuationKind::Pauli ? 2 : 1; }

    /// The iso factor of one sample as a matrix (1x1 for commuting).
    Matrix iso_factor(const IncrementRef& ref) const
    {
        const auto& c = lookup(ref);
        if (kind_ == FluctuationKind::Pauli) return Matrix(iso_matrix(c));
        Matrix m(1, 1);
        m(0, 0) = c[0];
        return m;
    }

private:
    void draw(std::array<Complex, 3>& s, double dt, RandomStream& stream) const
    {
        if (kind_ == FluctuationKind::Pauli) {
            s = sample_pauli(stream, dt).components;
        } else {
            s = {sample_scalar(stream, dt).value, Complex{}, Complex{}};
        }
    }

    FluctuationKind kind_;
    std::vector<Field> fields_;
};

/// dG(t_k) on system (x) iso space.
inline ComplexOperator step_operator(const FluctuationSchedule& schedule, std::size_t k, const IncrementTable& samples)
{
    require(k < schedule.n_steps(), ErrorCode::InvalidArgument, "step_operator: step index out of range");
    const int d = schedule.system_dim();
    const int iso = samples.iso_dim();
    Matrix out = Matrix::Zero(d * iso, d * iso);
    for (const auto& t : schedule.steps[k]) {
        const Matrix f = samples.iso_factor(t.ref);
        out += kron(t.op, ComplexOperator(f)).matrix();
    }
    if (schedule.drift) out += kron(*schedule.drift * Complex(schedule.dt), ComplexOperator::identity(iso)).matrix();
    return ComplexOperator(std::move(out));
}

/// K = prod_k (I + dG(t_k)), later steps on the left. An empty schedule
/// gives I, matching xi(0) = 0 and R(0) = 0.
inline ComplexOperator time_ordered_propagator(const FluctuationSchedule& schedule, const IncrementTable& samples)
{
    const int n = schedule.system_dim() * samples.iso_dim();
    Matrix k = Matrix::Identity(n, n);
    for (std::size_t s = 0; s < schedule.n_steps(); ++s) k = (Matrix::Identity(n, n) + step_operator(schedule, s, samples).matrix()) * k;
    return ComplexOperator(std::move(k));
}

struct DysonTerms {
    std::vector<ComplexOperator> orders;
};

/// K^(0) = I and K^(n) = sum_k dG(t_k) K^(n-1)(t_k), where K^(n-1)(t_k)
/// only contains steps strictly before k. With n_max >= n_steps the sum of
/// all orders equals the propagator exactly.
inline DysonTerms dyson_terms(const FluctuationSchedule& schedule, const IncrementTable& samples, int n_max)
{
    require(n_max >= 0, ErrorCode::InvalidArgument, "dyson_terms: n_max must be >= 0");
    const int n = schedule.system_dim() * samples.iso_dim();
    std::vector<Matrix> k(static_cast<std::size_t>(n_max) + 1, Matrix::Zero(n, n));
    k[0] = Matrix::Identity(n, n);
    for (std::size_t s = 0; s < schedule.n_steps(); ++s) {
        const Matrix g = step_operator(schedule, s, samples).matrix();
        for (int order = n_max; order >= 1; --order)
            k[static_cast<std::size_t>(order)] += g * k[static_cast<std::size_t>(order - 1)];
    }
    DysonTerms out;
    for (auto& m : k) out.orders.emplace_back(std::move(m));
    return out;
}

struct SecondOrderDensity {
    /// M[K1 rho0 K1^dag + K2 rho0 K2^dag], iso-traced.
    ComplexOperator rho;
    ComplexOperator first_order;
    ComplexOperator second_order;
    /// Largest per-entry standard error of each estimate.
    double first_order_se = 0.0;
    double second_order_se = 0.0;
    /// Unbalanced cross term M[K1 rho0 K2^dag], iso-traced, with its
    /// per-entry standard errors.
    ComplexOperator cross;
    Eigen::MatrixXd cross_se;
    /// M[K1^dag K1 + K2^dag K2] on the joint space, the input of drift_second_order.
    ComplexOperator gram_mean;
    std::size_t n_samples = 0;
};

namespace detail {

struct EntryAccumulator {
    std::vector<ComplexAccumulator> acc;
    int dim = 0;

    explicit EntryAccumulator(int d) : acc(static_cast<std::size_t>(d * d)), dim(d) {}

    void add(const Matrix& m)
    {
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) acc[static_cast<std::size_t>(r * dim + c)].add(m(r, c));
    }

    Matrix mean() const
    {
        Matrix m(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) m(r, c) = acc[static_cast<std::size_t>(r * dim + c)].estimate().mean;
        return m;
    }

    Eigen::MatrixXd standard_errors() const
    {
        Eigen::MatrixXd m(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c)
                m(r, c) = acc[static_cast<std::size_t>(r * dim + c)].estimate().standard_error;
        return m;
    }
};

} // namespace detail

/// Monte Carlo estimate of the density through second order from the
/// fluctuation propagator alone (no drift). The joint initial state is
/// rho0 (x) I/iso_dim. Sample i draws its increments from
/// RandomStream(seed, i), with seed taken once from `stream`.
inline SecondOrderDensity density_second_order(const DensityOperator& rho0, const FluctuationSchedule& schedule,
                                               FluctuationKind kind, std::size_t n_mc, RandomStream& stream,
                                               unsigned workers = 0)
{
    require(n_mc >= 100, ErrorCode::InvalidArgument, "density_second_order: n_mc must be >= 100");
    schedule.validate();
    const int d = schedule.system_dim();
    require(rho0.dim() == d, ErrorCode::DimensionMismatch, "density_second_order: rho0 dimension mismatch");
    const int iso = kind == FluctuationKind::Pauli ? 2 : 1;
    const Matrix joint0 =
        kron(rho0.op(), ComplexOperator::identity(iso) * Complex(1.0 / iso)).matrix();

    struct Sample {
        Matrix first, second, cross, gram;
    };
    std::vector<Sample> samples(n_mc);
    const std::uint64_t seed = stream.next_u64();
    parallel_for_index(n_mc, workers, [&](std::size_t i) {
        RandomStream s(seed, i);
        const IncrementTable table = IncrementTable::for_schedule(schedule, kind, s);
        const DysonTerms k = dyson_terms(schedule, table, 2);
        const Matrix& k1 = k.orders[1].matrix();
        const Matrix& k2 = k.orders[2].matrix();
        samples[i] = {partial_trace_iso(ComplexOperator(Matrix(k1 * joint0 * k1.adjoint())), d, iso).matrix(),
                      partial_trace_iso(ComplexOperator(Matrix(k2 * joint0 * k2.adjoint())), d, iso).matrix(),
                      partial_trace_iso(ComplexOperator(Matrix(k1 * joint0 * k2.adjoint())), d, iso).matrix(),
                      k1.adjoint() * k1 + k2.adjoint() * k2};
    });

    detail::EntryAccumulator first(d), second(d), cross(d), gram(d * iso);
    for (const auto& s : samples) {
        first.add(s.first);
        second.add(s.second);
        cross.add(s.cross);
        gram.add(s.gram);
    }
    SecondOrderDensity out{ComplexOperator(Matrix(first.mean() + second.mean())),
                           ComplexOperator(first.mean()),
                           ComplexOperator(second.mean()),
                           first.standard_errors().maxCoeff(),
                           second.standard_errors().maxCoeff(),
                           ComplexOperator(cross.mean()),
                           cross.standard_errors(),
                           ComplexOperator(gram.mean()),
                           n_mc};
    return out;
}

/// S_R = -1/2 M[K^dag K] at the first non-vanishing order.
inline ComplexOperator drift_second_order(const ComplexOperator& k2_mean) { return k2_mean * Complex(-0.5); }

} // namespace stfluct
