#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "prodwave/cross_section.hpp"
#include "prodwave/transverse.hpp"

namespace prodwave {

/// One transverse block A_k of the damped wave generator on states U = (u, v).
///
///   u' = v,   v' = -M^{-1} (Q u + B_a v),   Q = K + eta^2 M + B_b,
///
/// where B_a, B_b carry the endpoint coefficients a, b. The E-norm Gram form is
/// blockdiag(Q, M). When eta^2 = 0 and b = 0 the state space is restricted to
/// ker l with l(u, v) = 1^T M v + a(0) u_0 + a(1) u_N.
class ModeGenerator {
public:
    ModeGenerator(const CrossSection& disc, const GeneratorCoefficients& coeffs, double eta_sq);

    [[nodiscard]] double eta_sq() const { return eta_sq_; }
    [[nodiscard]] Eigen::Index n_nodes() const { return mass_.size(); }
    [[nodiscard]] Eigen::Index state_size() const { return 2 * n_nodes(); }
    [[nodiscard]] bool constraint_active() const { return constrained_; }
    [[nodiscard]] const GeneratorCoefficients& coefficients() const { return coeffs_; }
    [[nodiscard]] double h() const { return h_; }

    [[nodiscard]] const RealVector& mass() const { return mass_; }
    [[nodiscard]] const RealVector& q_diag() const { return q_diag_; }
    [[nodiscard]] const RealVector& q_off() const { return q_off_; }
    /// Diagonal of B_a (nonzero only at the endpoints).
    [[nodiscard]] RealVector damping_diag() const;

    /// A U in full coordinates.
    [[nodiscard]] ComplexVector apply(const ComplexVector& state) const;
    /// <U, W>_E = W^* blockdiag(Q, M) U.
    [[nodiscard]] Complex gram_inner(const ComplexVector& a, const ComplexVector& b) const;
    [[nodiscard]] double energy_norm_sq(const ComplexVector& state) const;
    /// Physical energy 1/2 (|grad u|^2 + eta^2 |u|^2 + |v|^2) without the b boundary term.
    [[nodiscard]] double physical_energy(const ComplexVector& state) const;
    /// a(0)|v_0|^2 + a(1)|v_N|^2.
    [[nodiscard]] double boundary_dissipation(const ComplexVector& state) const;
    /// l(u, v); meaningful for every block, a constraint only when constraint_active().
    [[nodiscard]] Complex constraint(const ComplexVector& state) const;
    /// l(1, 0) = a(0) + a(1).
    [[nodiscard]] double constraint_of_constant() const { return coeffs_.a_left + coeffs_.a_right; }

    /// Sparse block and Gram matrix in full coordinates.
    [[nodiscard]] Eigen::SparseMatrix<double> block() const;
    [[nodiscard]] Eigen::SparseMatrix<double> gram() const;

    /// Generator in E-orthonormal coordinates x = (R u, M^{1/2} v), with R the
    /// transposed Cholesky factor of Q, or the scaled difference operator on the
    /// quotient by constants when the constraint is active. The E-norm of a
    /// state equals the Euclidean norm of its reduced coordinates.
    [[nodiscard]] const Eigen::SparseMatrix<double>& reduced() const { return reduced_; }
    [[nodiscard]] Eigen::Index reduced_size() const { return reduced_.rows(); }
    [[nodiscard]] ComplexVector to_reduced(const ComplexVector& state) const;
    /// Inverse of to_reduced; in the constrained case returns the representative with l = 0.
    [[nodiscard]] ComplexVector from_reduced(const ComplexVector& x) const;

private:
    double eta_sq_;
    double h_;
    GeneratorCoefficients coeffs_;
    bool constrained_;
    RealVector mass_;
    RealVector q_diag_;
    RealVector q_off_;
    std::optional<TridiagonalCholesky> chol_;
    Eigen::SparseMatrix<double> reduced_;
};

ModeGenerator assemble_mode_generator(const CrossSection& disc, const DampingProfile& damping, double eta_sq);

struct ModeSpectrum {
    std::vector<Complex> eigenvalues;  // sorted by imaginary part, then real part
    double abscissa = 0.0;
};

/// All eigenvalues of the (constrained) block by a dense eigen-solve.
ModeSpectrum mode_spectrum(const ModeGenerator& gen);

/// ||(A + i lambda)^{-1}||_{E -> E}. Throws NearSingular when the smallest
/// singular value of A + i lambda falls below 1e-13.
double mode_resolvent_norm(const ModeGenerator& gen, double lambda);

/// Eigenvalue of the reduced block nearest to `guess`, by shifted inverse
/// iteration with Rayleigh-quotient updates of the shift.
Complex nearest_eigenvalue(const ModeGenerator& gen, Complex guess, int max_iterations = 60);

struct ProductNorm {
    double norm = 0.0;
    double argmax_eta = 0.0;
    double margin = 0.0;
    std::size_t modes_checked = 0;
};

/// Caches one ModeGenerator per transverse eigenvalue; mode() is safe to call concurrently.
class ModeFamily {
public:
    ModeFamily(TransverseModel model, CrossSection disc, DampingProfile damping);

    [[nodiscard]] const ModeGenerator& mode(double eta);
    [[nodiscard]] const TransverseModel& model() const { return model_; }
    [[nodiscard]] const CrossSection& disc() const { return disc_; }
    [[nodiscard]] const DampingProfile& damping() const { return damping_; }

private:
    TransverseModel model_;
    CrossSection disc_;
    DampingProfile damping_;
    std::map<double, ModeGenerator> cache_;
    std::mutex mutex_;
};

/// Maximum of mode_resolvent_norm over the transverse eigenvalues eta <= |lambda| + margin,
/// margin = 5 + 0.1 |lambda| doubled while the maximizer sits on the largest searched
/// eta (at most three times, then MarginExhausted).
ProductNorm product_resolvent_norm(const TransverseModel& model, const CrossSection& disc,
                                   const DampingProfile& damping, double lambda);
ProductNorm product_resolvent_norm(ModeFamily& family, double lambda);

struct ResolventPeak {
    double eta = 0.0;
    Complex eigenvalue{0.0, 0.0};
    double frequency = 0.0;  // s at which the norm peaks
    double norm = 0.0;
};

struct ResolventSweepRow {
    double lambda = 0.0;
    double product_norm = 0.0;
    double argmax_eta = 0.0;
    /// sup of the product norm over [lambda_0, lambda], including the resonance peaks.
    double envelope = 0.0;
};

struct ResolventSweep {
    std::vector<ResolventSweepRow> rows;
    std::vector<ResolventPeak> peaks;
    std::optional<PowerLawFit> pointwise_fit;
    std::optional<PowerLawFit> envelope_fit;
};

struct ResolventSweepOptions {
    /// Locate the near-axis eigenvalues of each mode and include the norm at
    /// their frequencies in the envelope.
    bool resolve_peaks = true;
    /// Longitudinal Dirichlet indices n used as eigenvalue guesses sqrt(eta^2 + (n pi)^2).
    int peak_orders = 1;
};

/// Pointwise product norms on the grid plus their running supremum. Enforces
/// n_cells >= 8 max|lambda|.
ResolventSweep resolvent_sweep(const TransverseModel& model, const CrossSection& disc,
                               const DampingProfile& damping, const std::vector<double>& lambda_grid,
                               const ResolventSweepOptions& options = {});

/// Least-squares slope of log norm against log lambda. Requires at least 10
/// points with lambda >= 5.
PowerLawFit fit_resolvent_exponent(const std::vector<double>& lambdas, const std::vector<double>& norms);

/// CSV with columns lambda,product_norm,argmax_eta,envelope.
void write_resolvent_csv(const std::string& path, const ResolventSweep& sweep);
/// CSV with columns eta,abscissa,n_eigenvalues.
void write_abscissa_csv(const std::string& path, const std::vector<double>& etas,
                        const std::vector<ModeSpectrum>& spectra);
/// CSV with columns re,im.
void write_eigenvalues_csv(const std::string& path, const ModeSpectrum& spectrum);

} // namespace prodwave
