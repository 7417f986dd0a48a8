#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prodwave/common.hpp"
#include "prodwave/linalg.hpp"

namespace prodwave {

/// Boundary damping on the two endpoints of X = [0, 1].
///
/// a0/b0 enter the frequency-domain impedance problems; a/b are the
/// time-domain coefficients of the generator, constant along Y.
struct DampingProfile {
    double a0_left = 1.0;
    double a0_right = 1.0;
    double b0_left = 0.0;
    double b0_right = 0.0;
    double a_left = 1.0;
    double a_right = 1.0;
    double b_left = 0.0;
    double b_right = 0.0;
    double c0 = 1.0;

    /// a0 = a = value at both ends, b0 = b = 0, c0 = 1.
    static DampingProfile uniform(double value);

    /// Throws InvalidInput unless 0 <= b0 <= a0, c0 a0 <= a <= a0, 0 <= b <= a0
    /// at both ends, c0 > 0, and a0 is positive at one end at least.
    void validate() const;

    /// True when b0 >= c0 a0 > 0 wherever a0 > 0 (the overdamped case that
    /// admits the zero boundary frequency).
    [[nodiscard]] bool b0_comparable() const;
};

/// Generator-side boundary coefficients in d_n u + a v + b u = 0.
struct GeneratorCoefficients {
    double a_left = 0.0;
    double a_right = 0.0;
    double b_left = 0.0;
    double b_right = 0.0;

    static GeneratorCoefficients from(const DampingProfile& damping);
    void validate() const;
    [[nodiscard]] bool b_vanishes() const { return b_left == 0.0 && b_right == 0.0; }
    [[nodiscard]] bool a_vanishes() const { return a_left == 0.0 && a_right == 0.0; }
};

/// Uniform grid on X = [0, 1] with the positive Laplacian Delta_x = -d^2/dx^2.
///
/// Ghost-node closure at the endpoints makes the scheme equal to linear
/// finite elements with trapezoid (lumped) mass: M Delta_x u = K u + boundary
/// flux, where K is the stiffness form and M = diag(mass_weights).
class CrossSection {
public:
    explicit CrossSection(int n_cells);

    [[nodiscard]] int n_cells() const { return n_cells_; }
    [[nodiscard]] Eigen::Index n_nodes() const { return n_cells_ + 1; }
    [[nodiscard]] double h() const { return h_; }
    [[nodiscard]] double x(Eigen::Index j) const { return static_cast<double>(j) * h_; }
    [[nodiscard]] RealVector nodes() const;

    /// Trapezoid weights, h/2 at the endpoints and h inside; they sum to 1.
    [[nodiscard]] const RealVector& mass_weights() const { return mass_; }

    /// Stiffness K (tridiagonal): diagonal and first off-diagonal.
    [[nodiscard]] const RealVector& stiffness_diag() const { return k_diag_; }
    [[nodiscard]] const RealVector& stiffness_off() const { return k_off_; }

    /// Neumann-closed Laplacian stencil M^{-1} K u.
    [[nodiscard]] ComplexVector laplacian(const ComplexVector& u) const;

    /// sum_j h |(u_{j+1} - u_j)/h|^2, polarized: sum conj(dv) du / h.
    [[nodiscard]] Complex gradient_form(const ComplexVector& u, const ComplexVector& v) const;
    [[nodiscard]] double gradient_energy(const ComplexVector& u) const;

    /// Trapezoid L^2(X) inner product sum w_j u_j conj(v_j).
    [[nodiscard]] Complex inner(const ComplexVector& u, const ComplexVector& v) const;
    [[nodiscard]] double l2_norm_sq(const ComplexVector& u) const;

private:
    int n_cells_;
    double h_;
    RealVector mass_;
    RealVector k_diag_;
    RealVector k_off_;
};

CrossSection build_cross_section(int n_cells, const DampingProfile& damping);

/// (Delta_x - z) u = f on X,  i d_n u + a0 lambda u (+ i b0 u) = g on dX.
struct ImpedanceProblem {
    double lambda = 0.0;
    double z = 0.0;
    bool include_perturbation = false;
    ComplexVector f;
    Complex g_left{0.0, 0.0};
    Complex g_right{0.0, 0.0};
};

/// Solves the discrete impedance problem. Throws SingularSystem (with the
/// offending lambda and z in the message) when the tridiagonal factorization
/// is rank deficient.
ComplexVector solve_impedance(const CrossSection& disc, const DampingProfile& damping,
                              const ImpedanceProblem& problem);

/// Relative residual of the assembled system for a computed solution.
double impedance_residual(const CrossSection& disc, const DampingProfile& damping,
                          const ImpedanceProblem& problem, const ComplexVector& u);

/// Weights of a worst-case ratio
///   (target_l2 |u|^2 + target_grad |grad u|^2) / (source_f |f|^2 + source_g |g/sqrt(a0)|^2).
struct RatioWeights {
    double target_l2 = 1.0;
    double target_grad = 1.0;
    double source_f = 1.0;
    double source_g = 1.0;

    /// |u|^2 + <mu>^-2 |grad u|^2 over <mu>^{2 delta} |f|^2 + <mu>^{-2+delta} |g/sqrt a0|^2.
    static RatioWeights classical(double mu, double delta);
    /// |u|_{H^1}^2 over <lambda>^{2+2 delta} |f|^2 + <lambda>^{delta} |g/sqrt a0|^2.
    static RatioWeights overdamped(double lambda, double delta);
};

struct WorstCase {
    double ratio = 0.0;
    /// 'f' when the volume source carries most of the maximizing data, else 'g'.
    char kind = 'f';
};

/// Exact supremum of the weighted ratio over all (f, g), as the square of the
/// largest singular value of the weighted solution operator (dense SVD).
WorstCase worst_ratio(const CrossSection& disc, const DampingProfile& damping, double lambda, double z,
                      bool include_perturbation, const RatioWeights& weights);

struct ImpedanceOptions {
    double mu0 = 1.0;
    bool include_perturbation = false;
};

double impedance_resolvent_norm(const CrossSection& disc, const DampingProfile& damping, double mu,
                                double delta, const ImpedanceOptions& options = {});

struct SweepRow {
    double parameter = 0.0;  // mu or lambda
    double z = 0.0;
    double worst_ratio = 0.0;
    char kind = 'f';
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// Per distinct parameter, the worst ratio over its z values (grid order).
    std::vector<double> parameters;
    std::vector<double> parameter_max;
    /// Slope of log(parameter_max) against log<parameter>; absent for one point.
    std::optional<PowerLawFit> fit;
    double max_ratio = 0.0;
    double argmax_parameter = 0.0;
    double min_of_parameter_max = 0.0;
};

/// Classical impedance sweep (z = mu^2, boundary frequency mu). Enforces
/// n_cells >= 8 max|mu| and |mu| >= mu0 unless the perturbed problem is used.
SweepResult sweep_impedance(const CrossSection& disc, const DampingProfile& damping,
                            const std::vector<double>& mu_grid, double delta,
                            const ImpedanceOptions& options = {});

/// z = offset + factor * lambda^2 for each term.
struct ZRule {
    struct Term {
        double offset = 0.0;
        double factor = 0.0;
    };
    std::vector<Term> terms;

    [[nodiscard]] std::vector<double> values(double lambda) const;
    /// Parses a comma list such as "-50, 0, 0.5*l2, l2" (l2 stands for lambda^2).
    static ZRule parse(const std::string& text);
};

struct OverdampedOptions {
    double lambda0 = 1.0;
    bool include_perturbation = true;
    /// Replaces the overdamped weights by the classical ones; used to compare
    /// against sweep_impedance on the z = lambda^2 slice.
    bool classical_weights = false;
};

/// Overdamped sweep over (lambda, z) pairs. When damping.b0_comparable() the
/// grid is extended by lambda = 0 if absent; otherwise |lambda| < lambda0 is rejected.
SweepResult overdamped_sweep(const CrossSection& disc, const DampingProfile& damping,
                             const std::vector<double>& lambda_grid, const ZRule& z_rule, double delta,
                             const OverdampedOptions& options = {});

/// CSV with columns mu,z,worst_ratio,argmax_kind.
void write_sweep_csv(const std::string& path, const SweepResult& result);
/// JSON sidecar with slope, intercept, max ratio and its argument.
void write_sweep_summary(const std::string& path, const SweepResult& result);

} // namespace prodwave
