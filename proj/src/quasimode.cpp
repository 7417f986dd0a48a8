#include "prodwave/quasimode.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace prodwave {

namespace {
constexpr Complex kI{0.0, 1.0};
}

DirichletMode dirichlet_mode(const CrossSection& disc, int n)
{
    require(n >= 1, fmt::format("dirichlet_mode: n = {} must be at least 1", n));
    DirichletMode mode;
    mode.n = n;
    mode.mu = n * M_PI;
    mode.w0.resize(disc.n_nodes());
    for (Eigen::Index j = 0; j < disc.n_nodes(); ++j) {
        mode.w0[j] = std::sqrt(2.0) * std::sin(mode.mu * disc.x(j));
    }
    mode.w0[0] = 0.0;
    mode.w0[disc.n_nodes() - 1] = 0.0;
    mode.dn_left = -std::sqrt(2.0) * mode.mu;
    mode.dn_right = std::sqrt(2.0) * mode.mu * (n % 2 == 0 ? 1.0 : -1.0);
    return mode;
}

std::pair<Complex, Complex> w1_boundary_values(const DampingProfile& damping, const DirichletMode& w0)
{
    require(damping.a_left > 0.0 && damping.a_right > 0.0,
            "build_w1: the quasimode construction needs a > 0 at both endpoints");
    return {-kI * w0.dn_left / damping.a_left, -kI * w0.dn_right / damping.a_right};
}

ComplexVector build_w1(const CrossSection& disc, const DampingProfile& damping, const DirichletMode& w0)
{
    const auto [v0, v1] = w1_boundary_values(damping, w0);
    ComplexVector w1(disc.n_nodes());
    if (v0 == v1) {
        w1.setConstant(v0);
        return w1;
    }
    for (Eigen::Index j = 0; j < disc.n_nodes(); ++j) {
        const double x = disc.x(j);
        w1[j] = v0 + (v1 - v0) * (3.0 * x * x - 2.0 * x * x * x);
    }
    return w1;
}

ComplexVector quasimode_state(const ModeGenerator& gen, const DirichletMode& w0, const ComplexVector& w1,
                              double lambda)
{
    const Eigen::Index n = gen.n_nodes();
    require(w0.w0.size() == n && w1.size() == n, "quasimode_state: profiles do not match the grid");
    require(lambda > 0.0, "quasimode_state: lambda must be positive");
    const ComplexVector w = w0.w0.cast<Complex>() + w1 / lambda;
    ComplexVector state(2 * n);
    state.head(n) = w;
    state.tail(n) = -kI * lambda * w;
    return state / std::sqrt(gen.energy_norm_sq(state));
}

QuasimodeReport build_quasimode_family(const TransverseModel& model, const CrossSection& disc,
                                       const DampingProfile& damping, int n, const std::vector<int>& k_list,
                                       bool compute_resolvent)
{
    damping.validate();
    require(!k_list.empty(), "build_quasimode_family: empty k list");
    const DirichletMode w0 = dirichlet_mode(disc, n);
    const ComplexVector w1 = build_w1(disc, damping, w0);
    const int k_max = *std::max_element(k_list.begin(), k_list.end());
    require(*std::min_element(k_list.begin(), k_list.end()) >= 0, "build_quasimode_family: negative k");

    const auto spectrum = first_spectral_values(model, static_cast<std::size_t>(k_max) + 1);

    QuasimodeReport report;
    report.n = n;
    report.mu = w0.mu;
    double lambda_max = 0.0;
    for (int k : k_list) {
        const double eta = spectrum[static_cast<std::size_t>(k)].eta;
        require(eta > 0.0, fmt::format("build_quasimode_family: k = {} has eta = 0", k));
        QuasimodeEntry e;
        e.k = k;
        e.eta = eta;
        e.lambda = std::sqrt(eta * eta + w0.mu * w0.mu);
        lambda_max = std::max(lambda_max, e.lambda);
        report.entries.push_back(e);
    }
    require(disc.n_cells() >= 8.0 * lambda_max,
            fmt::format("build_quasimode_family: n_cells = {} is below 8 * lambda_max = {}", disc.n_cells(),
                        8.0 * lambda_max));

    const GeneratorCoefficients coeffs = GeneratorCoefficients::from(damping);
    parallel_for(report.entries.size(), [&](std::size_t i) {
        QuasimodeEntry& e = report.entries[i];
        const ModeGenerator gen(disc, coeffs, e.eta * e.eta);
        const ComplexVector u = quasimode_state(gen, w0, w1, e.lambda);
        const ComplexVector r = gen.apply(u) + kI * e.lambda * u;
        e.residual = std::sqrt(gen.energy_norm_sq(r));
        // trace identity i d_n w + a lambda w = 0 with d_n w1 = 0
        const Complex w_left = w0.w0[0] + w1[0] / e.lambda;
        const Complex w_right = w0.w0[w0.w0.size() - 1] + w1[w1.size() - 1] / e.lambda;
        e.boundary_defect = std::max(std::abs(kI * w0.dn_left + damping.a_left * e.lambda * w_left),
                                     std::abs(kI * w0.dn_right + damping.a_right * e.lambda * w_right)) /
                            e.lambda;
        if (compute_resolvent) {
            e.resolvent_norm = mode_resolvent_norm(gen, e.lambda);
            e.product_ratio = e.resolvent_norm * e.residual;
        }
    });

    std::vector<double> lambdas;
    std::vector<double> residuals;
    std::vector<double> norms;
    for (const auto& e : report.entries) {
        lambdas.push_back(e.lambda);
        residuals.push_back(e.residual);
        norms.push_back(e.resolvent_norm);
    }
    report.residual_fit = fit_power_law(lambdas, residuals);
    if (compute_resolvent) {
        report.norm_fit = fit_power_law(lambdas, norms);
    }
    return report;
}

LowerBoundCheck verify_lower_bound(const QuasimodeReport& report)
{
    require(!report.entries.empty(), "verify_lower_bound: empty report");
    LowerBoundCheck check;
    check.min_product = std::numeric_limits<double>::infinity();
    check.table.push_back("k eta lambda residual resolvent_norm norm*residual");
    for (const auto& e : report.entries) {
        require(e.resolvent_norm > 0.0, "verify_lower_bound: report was built without resolvent norms");
        check.table.push_back(fmt::format("{} {:.6g} {:.6g} {:.6e} {:.6e} {:.6f}", e.k, e.eta, e.lambda, e.residual,
                                          e.resolvent_norm, e.product_ratio));
        check.min_product = std::min(check.min_product, e.product_ratio);
        if (e.product_ratio < 1.0 - 1e-8) {
            throw DiscretizationInconsistency(
                fmt::format("resolvent norm {:.6e} is below 1/residual {:.6e} at k = {}, lambda = {}",
                            e.resolvent_norm, 1.0 / e.residual, e.k, e.lambda));
        }
    }
    double growth = 0.0;
    if (report.norm_fit && report.residual_fit) {
        growth = report.norm_fit->slope;
        check.slope_gap = std::abs(report.norm_fit->slope + report.residual_fit->slope);
    }
    check.conclusion = fmt::format(
        "decay exponent cannot exceed 1/2 + fit-tolerance (resolvent growth exponent {:.3f}, implied bound {:.3f})",
        growth, growth > 0.0 ? 1.0 / growth : std::numeric_limits<double>::infinity());
    return check;
}

void write_quasimode_csv(const std::string& path, const QuasimodeReport& report)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), fmt::format("cannot open '{}' for writing", path));
    out << "k,eta,lambda,residual,resolvent_norm,product_ratio\n";
    for (const auto& e : report.entries) {
        fmt::print(out, "{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", e.k, e.eta, e.lambda, e.residual,
                   e.resolvent_norm, e.product_ratio);
    }
}

} // namespace prodwave
