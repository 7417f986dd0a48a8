#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prodwave/generator.hpp"

namespace prodwave {

/// L^2-normalized Dirichlet eigenfunction sqrt(2) sin(n pi x) of the unit interval.
struct DirichletMode {
    int n = 1;
    double mu = M_PI;
    RealVector w0;
    /// Outward normal derivatives, -w0'(0) and +w0'(1), from the closed form.
    double dn_left = 0.0;
    double dn_right = 0.0;
};

DirichletMode dirichlet_mode(const CrossSection& disc, int n);

/// Boundary values of the extension w1, -i d_n w0 / a at each endpoint.
std::pair<Complex, Complex> w1_boundary_values(const DampingProfile& damping, const DirichletMode& w0);

/// Extension with the prescribed endpoint values and zero slope at both ends:
/// a cubic Hermite blend, or the constant when the two values coincide.
ComplexVector build_w1(const CrossSection& disc, const DampingProfile& damping, const DirichletMode& w0);

struct QuasimodeEntry {
    int k = 0;
    double eta = 0.0;
    double lambda = 0.0;
    double residual = 0.0;        // ||(A_k + i lambda) U||_E with ||U||_E = 1
    double resolvent_norm = 0.0;  // ||(A_k + i lambda)^{-1}||_E
    double product_ratio = 0.0;   // resolvent_norm * residual
    double boundary_defect = 0.0; // |i d_n w + a lambda w| at the endpoints, relative to lambda
};

struct QuasimodeReport {
    int n = 1;
    double mu = M_PI;
    std::vector<QuasimodeEntry> entries;
    std::optional<PowerLawFit> residual_fit;  // log residual against log lambda
    std::optional<PowerLawFit> norm_fit;      // log resolvent_norm against log lambda
};

/// Unit E-norm state (w, -i lambda w) / ||.||_E with w = w0 + w1 / lambda on mode eta.
ComplexVector quasimode_state(const ModeGenerator& gen, const DirichletMode& w0, const ComplexVector& w1,
                              double lambda);

/// Quasimodes on the transverse eigenvalues with indices k_list (into the
/// distinct sorted spectrum), lambda_k = sqrt(eta_k^2 + mu^2). Requires a > 0
/// at both ends, eta_k > 0, and n_cells >= 8 lambda_max.
QuasimodeReport build_quasimode_family(const TransverseModel& model, const CrossSection& disc,
                                       const DampingProfile& damping, int n, const std::vector<int>& k_list,
                                       bool compute_resolvent = true);

struct LowerBoundCheck {
    std::vector<std::string> table;
    std::string conclusion;
    double min_product = 0.0;
    double slope_gap = 0.0;  // |slope(log norm) + slope(log residual)|
};

/// Checks resolvent_norm * residual >= 1 - 1e-8 for every entry and throws
/// DiscretizationInconsistency on a violation.
LowerBoundCheck verify_lower_bound(const QuasimodeReport& report);

/// CSV with columns k,eta,lambda,residual,resolvent_norm,product_ratio.
void write_quasimode_csv(const std::string& path, const QuasimodeReport& report);

} // namespace prodwave
