#pragma once

// Small dense complex linear algebra for the system (arm) space, the iso space
// and their tensor product. Every space here has dimension <= 4.

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stfluct/error.hpp"
#include "stfluct/random.hpp"

namespace stfluct {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Square complex matrix with value semantics.
class ComplexOperator {
public:
    ComplexOperator() : m_(Matrix::Zero(1, 1)) {}

    explicit ComplexOperator(Matrix m) : m_(std::move(m))
    {
        require(m_.rows() > 0 && m_.rows() == m_.cols(), ErrorCode::DimensionMismatch,
                "ComplexOperator: matrix must be square and non-empty");
    }

    /// Row-major entries; entries.size() must equal dim * dim.
    ComplexOperator(int dim, std::span<const Complex> entries)
    {
        require(dim > 0, ErrorCode::InvalidArgument, "ComplexOperator: dim must be positive");
        require(entries.size() == static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim),
                ErrorCode::DimensionMismatch, "ComplexOperator: entry count must be dim^2");
        m_.resize(dim, dim);
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c) m_(r, c) = entries[static_cast<std::size_t>(r * dim + c)];
    }

    ComplexOperator(std::initializer_list<std::initializer_list<Complex>> rows)
    {
        const auto n = static_cast<Eigen::Index>(rows.size());
        require(n > 0, ErrorCode::DimensionMismatch, "ComplexOperator: empty row list");
        m_.resize(n, n);
        Eigen::Index r = 0;
        for (const auto& row : rows) {
            require(static_cast<Eigen::Index>(row.size()) == n, ErrorCode::DimensionMismatch,
                    "ComplexOperator: matrix must be square");
            Eigen::Index c = 0;
            for (const auto& v : row) m_(r, c++) = v;
            ++r;
        }
    }

    static ComplexOperator identity(int dim)
    {
        require(dim > 0, ErrorCode::InvalidArgument, "identity: dim must be positive");
        return ComplexOperator(Matrix::Identity(dim, dim));
    }

    static ComplexOperator zero(int dim)
    {
        require(dim > 0, ErrorCode::InvalidArgument, "zero: dim must be positive");
        return ComplexOperator(Matrix::Zero(dim, dim));
    }

    /// |v><w|
    static ComplexOperator outer(const Vector& v, const Vector& w)
    {
        require(v.size() == w.size(), ErrorCode::DimensionMismatch, "outer: size mismatch");
        return ComplexOperator(Matrix(v * w.adjoint()));
    }

    int dim() const noexcept { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const noexcept { return m_; }
    Complex operator()(int r, int c) const { return m_(r, c); }

    std::vector<Complex> entries() const
    {
        std::vector<Complex> out;
        out.reserve(static_cast<std::size_t>(dim() * dim()));
        for (int r = 0; r < dim(); ++r)
            for (int c = 0; c < dim(); ++c) out.push_back(m_(r, c));
        return out;
    }

    Complex trace() const { return m_.trace(); }

    /// Largest entrywise modulus of (this - other).
    double max_abs_diff(const ComplexOperator& other) const
    {
        check_same_dim(other, "max_abs_diff");
        return (m_ - other.m_).cwiseAbs().maxCoeff();
    }

    bool is_hermitian(double tol) const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol; }

    bool is_unitary(double tol) const
    {
        return (m_ * m_.adjoint() - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() <= tol;
    }

    ComplexOperator operator+(const ComplexOperator& o) const
    {
        check_same_dim(o, "operator+");
        return ComplexOperator(Matrix(m_ + o.m_));
    }
    ComplexOperator operator-(const ComplexOperator& o) const
    {
        check_same_dim(o, "operator-");
        return ComplexOperator(Matrix(m_ - o.m_));
    }
    ComplexOperator operator*(const ComplexOperator& o) const
    {
        check_same_dim(o, "operator*");
        return ComplexOperator(Matrix(m_ * o.m_));
    }
    ComplexOperator operator*(Complex s) const { return ComplexOperator(Matrix(m_ * s)); }
    friend ComplexOperator operator*(Complex s, const ComplexOperator& a) { return a * s; }
    ComplexOperator operator-() const { return ComplexOperator(Matrix(-m_)); }

    Vector apply(const Vector& v) const
    {
        require(v.size() == m_.cols(), ErrorCode::DimensionMismatch, "apply: vector size mismatch");
        return m_ * v;
    }

    bool operator==(const ComplexOperator& o) const { return dim() == o.dim() && m_ == o.m_; }

private:
    void check_same_dim(const ComplexOperator& o, const char* where) const
    {
        require(dim() == o.dim(), ErrorCode::DimensionMismatch, std::string(where) + ": dimension mismatch");
    }

    Matrix m_;
};

inline ComplexOperator dagger(const ComplexOperator& op) { return ComplexOperator(Matrix(op.matrix().adjoint())); }

/// Tensor product with the first factor as the slow (outer) index.
/// Throughout the library the ordering is system (x) iso.
inline ComplexOperator kron(const ComplexOperator& a, const ComplexOperator& b)
{
    const int na = a.dim();
    const int nb = b.dim();
    Matrix out(na * nb, na * nb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j) out.block(i * nb, j * nb, nb, nb) = a(i, j) * b.matrix();
    return ComplexOperator(std::move(out));
}

/// Trace over the iso factor of a system (x) iso operator.
inline ComplexOperator partial_trace_iso(const ComplexOperator& joint, int sys_dim, int iso_dim)
{
    require(sys_dim > 0 && iso_dim > 0, ErrorCode::InvalidArgument, "partial_trace_iso: dimensions must be positive");
    require(joint.dim() == sys_dim * iso_dim, ErrorCode::DimensionMismatch,
            "partial_trace_iso: joint dimension must equal sys_dim * iso_dim");
    Matrix out = Matrix::Zero(sys_dim, sys_dim);
    for (int i = 0; i < sys_dim; ++i)
        for (int j = 0; j < sys_dim; ++j)
            out(i, j) = joint.matrix().block(i * iso_dim, j * iso_dim, iso_dim, iso_dim).trace();
    return ComplexOperator(std::move(out));
}

/// Trace over the system factor, leaving the iso_dim x iso_dim reduced operator.
inline ComplexOperator partial_trace_system(const ComplexOperator& joint, int sys_dim, int iso_dim)
{
    require(joint.dim() == sys_dim * iso_dim, ErrorCode::DimensionMismatch,
            "partial_trace_system: joint dimension must equal sys_dim * iso_dim");
    Matrix out = Matrix::Zero(iso_dim, iso_dim);
    for (int i = 0; i < sys_dim; ++i) out += joint.matrix().block(i * iso_dim, i * iso_dim, iso_dim, iso_dim);
    return ComplexOperator(std::move(out));
}

/// Pauli matrix sigma_i, i in {1, 2, 3}.
inline ComplexOperator pauli(int i)
{
    switch (i) {
    case 1: return ComplexOperator{{0.0, 1.0}, {1.0, 0.0}};
    case 2: return ComplexOperator{{0.0, -kI}, {kI, 0.0}};
    case 3: return ComplexOperator{{1.0, 0.0}, {0.0, -1.0}};
    default: throw Error(ErrorCode::InvalidArgument, "pauli: index must be 1, 2 or 3");
    }
}

/// Density operator. Hermitian to 1e-12 per entry; when flagged normalized,
/// trace 1 to 1e-10 and no eigenvalue below -1e-10.
class DensityOperator {
public:
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kTraceTol = 1e-10;
    static constexpr double kEigenTol = 1e-10;

    DensityOperator(ComplexOperator op, bool normalized) : op_(std::move(op)), normalized_(normalized)
    {
        require(op_.is_hermitian(kHermitianTol), ErrorCode::InvalidArgument, "DensityOperator: not Hermitian");
        if (normalized_) {
            require(std::abs(op_.trace() - Complex(1.0)) <= kTraceTol, ErrorCode::InvalidArgument,
                    "DensityOperator: trace differs from 1");
            require(min_eigenvalue() >= -kEigenTol, ErrorCode::InvalidArgument,
                    "DensityOperator: negative eigenvalue");
        }
    }

    /// Hermitizes, divides by the trace and validates.
    static DensityOperator normalize(const ComplexOperator& raw)
    {
        const Matrix h = 0.5 * (raw.matrix() + raw.matrix().adjoint());
        const double tr = h.trace().real();
        require(tr > 0.0, ErrorCode::InvalidArgument, "DensityOperator::normalize: trace must be positive");
        return DensityOperator(ComplexOperator(Matrix(h / tr)), true);
    }

    static DensityOperator pure(const Vector& psi)
    {
        const double n2 = psi.squaredNorm();
        require(n2 > 0.0, ErrorCode::InvalidArgument, "DensityOperator::pure: zero vector");
        Matrix m = psi * psi.adjoint() / n2;
        m = 0.5 * (m + Matrix(m.adjoint()));
        return DensityOperator(ComplexOperator(std::move(m)), true);
    }

    const ComplexOperator& op() const noexcept { return op_; }
    bool normalized() const noexcept { return normalized_; }
    int dim() const noexcept { return op_.dim(); }
    Complex operator()(int r, int c) const { return op_(r, c); }

    Eigen::VectorXd eigenvalues() const
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(op_.matrix(), Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }
    double min_eigenvalue() const { return eigenvalues().minCoeff(); }

private:
    ComplexOperator op_;
    bool normalized_;
};

/// Unnormalized pure state of linear state diffusion. The weight of a
/// trajectory is its squared norm; nothing here renormalizes it.
struct TrajectoryState {
    Vector vec;

    TrajectoryState() = default;
    explicit TrajectoryState(Vector v) : vec(std::move(v))
    {
        require(vec.size() > 0, ErrorCode::InvalidArgument, "TrajectoryState: empty vector");
    }

    int dim() const noexcept { return static_cast<int>(vec.size()); }
    double weight() const { return vec.squaredNorm(); }
};

} // namespace stfluct
