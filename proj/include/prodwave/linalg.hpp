#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "prodwave/common.hpp"

namespace prodwave {

/// Tridiagonal LU with partial pivoting (the xGTTRF/xGTTRS scheme).
///
/// Row i of the matrix is lower[i-1]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1].
/// Construction throws SingularSystem when a pivot falls below
/// `pivot_tolerance * max|entry|`.
template <class Scalar>
class TridiagonalLU {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    TridiagonalLU(Vector lower, Vector diag, Vector upper, double pivot_tolerance = 1e-14);

    [[nodiscard]] Eigen::Index size() const { return d_.size(); }

    template <class Rhs>
    [[nodiscard]] Rhs solve(const Rhs& rhs) const;

    /// Smallest |pivot| relative to the largest matrix entry.
    [[nodiscard]] double min_relative_pivot() const { return min_relative_pivot_; }

private:
    Vector dl_;
    Vector d_;
    Vector du_;
    Vector du2_;
    std::vector<bool> swapped_;
    double min_relative_pivot_ = 0.0;
};

/// Cholesky factor of a real symmetric positive definite tridiagonal matrix,
/// Q = L L^T with L lower bidiagonal.
class TridiagonalCholesky {
public:
    TridiagonalCholesky(const RealVector& diag, const RealVector& off);

    [[nodiscard]] const RealVector& diag() const { return l_diag_; }
    [[nodiscard]] const RealVector& sub() const { return l_sub_; }

    /// Solve Q x = rhs in place (real or complex rhs).
    template <class Vec>
    void solve_in_place(Vec& rhs) const;

    /// y = L^T x.
    template <class Vec>
    [[nodiscard]] Vec apply_upper(const Vec& x) const;

private:
    RealVector l_diag_;
    RealVector l_sub_;
};

struct LargestSingularValue {
    double value = 0.0;
    ComplexVector right_vector;
    int iterations = 0;
    double residual = 0.0;
};

/// Largest singular value of a linear operator given by its action and the
/// action of its adjoint, by Golub-Kahan-Lanczos bidiagonalization with full
/// reorthogonalization. Converged when the singular-triplet residual is below
/// `relative_tolerance * sigma`. The starting vector is seeded, so repeated
/// calls are bit-identical.
LargestSingularValue largest_singular_value(
    const std::function<ComplexVector(const ComplexVector&)>& apply,
    const std::function<ComplexVector(const ComplexVector&)>& apply_adjoint,
    Eigen::Index n, double relative_tolerance = 1e-12, int max_iterations = 400);

/// Least-squares line through (log x, log y).
struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double residual_rms = 0.0;
    std::size_t points = 0;
};

/// Fits log y = intercept + slope * log x. Returns nullopt for fewer than two
/// points or a degenerate abscissa.
std::optional<PowerLawFit> fit_power_law(std::span<const double> x, std::span<const double> y);

/// Caps the number of worker threads used by sweeps. Results never depend on it.
void set_max_threads(int threads);
int max_threads();

/// Runs body(i) for i in [0, n) across up to max_threads() workers. Each index
/// is handled exactly once; the first exception is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// --- template definitions ---------------------------------------------------

template <class Scalar>
TridiagonalLU<Scalar>::TridiagonalLU(Vector lower, Vector diag, Vector upper, double pivot_tolerance)
    : dl_(std::move(lower)), d_(std::move(diag)), du_(std::move(upper))
{
    const Eigen::Index n = d_.size();
    require(n >= 1 && dl_.size() == n - 1 && du_.size() == n - 1, "TridiagonalLU: inconsistent band sizes");
    du2_ = Vector::Zero(std::max<Eigen::Index>(n - 2, 0));
    swapped_.assign(static_cast<std::size_t>(std::max<Eigen::Index>(n - 1, 0)), false);

    double scale = d_.cwiseAbs().maxCoeff();
    if (n > 1) {
        scale = std::max({scale, dl_.cwiseAbs().maxCoeff(), du_.cwiseAbs().maxCoeff()});
    }
    if (scale == 0.0) {
        throw SingularSystem("TridiagonalLU: zero matrix");
    }

    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (std::abs(d_[i]) >= std::abs(dl_[i])) {
            // no interchange
            if (d_[i] != Scalar(0)) {
                const Scalar fact = dl_[i] / d_[i];
                dl_[i] = fact;
                d_[i + 1] -= fact * du_[i];
            }
        } else {
            const Scalar fact = d_[i] / dl_[i];
            d_[i] = dl_[i];
            dl_[i] = fact;
            const Scalar temp = du_[i];
            du_[i] = d_[i + 1];
            d_[i + 1] = temp - fact * d_[i + 1];
            if (i + 2 < n) {
                du2_[i] = du_[i + 1];
                du_[i + 1] = -fact * du_[i + 1];
            }
            swapped_[static_cast<std::size_t>(i)] = true;
        }
    }

    double min_pivot = std::abs(d_[0]);
    for (Eigen::Index i = 1; i < n; ++i) {
        min_pivot = std::min(min_pivot, static_cast<double>(std::abs(d_[i])));
    }
    min_relative_pivot_ = min_pivot / scale;
    if (min_relative_pivot_ <= pivot_tolerance) {
        throw SingularSystem("TridiagonalLU: pivot " + std::to_string(min_relative_pivot_) +
                             " relative to matrix scale, system is numerically singular");
    }
}

template <class Scalar>
template <class Rhs>
Rhs TridiagonalLU<Scalar>::solve(const Rhs& rhs) const
{
    const Eigen::Index n = d_.size();
    Rhs b = rhs;
    // L solve
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (!swapped_[static_cast<std::size_t>(i)]) {
            b[i + 1] -= dl_[i] * b[i];
        } else {
            const auto temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - dl_[i] * b[i];
        }
    }
    // U solve
    b[n - 1] /= d_[n - 1];
    if (n > 1) {
        b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
    }
    for (Eigen::Index i = n - 3; i >= 0; --i) {
        b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) / d_[i];
    }
    return b;
}

template <class Vec>
void TridiagonalCholesky::solve_in_place(Vec& rhs) const
{
    const Eigen::Index n = l_diag_.size();
    rhs[0] /= l_diag_[0];
    for (Eigen::Index i = 1; i < n; ++i) {
        rhs[i] = (rhs[i] - l_sub_[i - 1] * rhs[i - 1]) / l_diag_[i];
    }
    rhs[n - 1] /= l_diag_[n - 1];
    for (Eigen::Index i = n - 2; i >= 0; --i) {
        rhs[i] = (rhs[i] - l_sub_[i] * rhs[i + 1]) / l_diag_[i];
    }
}

template <class Vec>
Vec TridiagonalCholesky::apply_upper(const Vec& x) const
{
    const Eigen::Index n = l_diag_.size();
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = l_diag_[i] * x[i];
        if (i + 1 < n) {
            y[i] += l_sub_[i] * x[i + 1];
        }
    }
    return y;
}

} // namespace prodwave
