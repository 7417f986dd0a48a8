// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>

#include <fmt/format.h>

#include "oracles.hpp"
#include "prodwave/cli.hpp"
#include "prodwave/config.hpp"
#include "prodwave/evolution.hpp"
#include "prodwave/quasimode.hpp"

using namespace prodwave;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Verdict impedance_uniformity()
{
    set_max_threads(1);
    const auto start = std::chrono::steady_clock::now();
    const CrossSection disc(800);
    const SweepResult r = sweep_impedance(disc, DampingProfile::uniform(1.0), logspace(2.0, 100.0, 60), 0.0);
    const double elapsed = seconds_since(start);
    const double slope = r.fit ? r.fit->slope : std::numeric_limits<double>::quiet_NaN();
    return {std::abs(slope) <= 0.15 && elapsed <= 300.0,
            fmt::format("slope {:.4f}, max ratio {:.4f}, {:.1f} s single-threaded", slope, r.max_ratio, elapsed)};
}

Verdict overdamped_estimate()
{
    DampingProfile d = DampingProfile::uniform(1.0);
    d.b0_left = d.b0_right = 1.0;
    const CrossSection disc(400);
    const SweepResult r = overdamped_sweep(disc, d, linspace(1.0, 50.0, 50), ZRule::parse("-50, 0, 0.5*l2, l2"), 0.0);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& row : r.rows) {
        lo = std::min(lo, row.worst_ratio);
        hi = std::max(hi, row.worst_ratio);
    }
    const double all_pairs = hi / lo;
    const double per_lambda = r.max_ratio / r.min_of_parameter_max;
    const bool has_zero = !r.parameters.empty() && r.parameters.front() == 0.0;
    return {has_zero && all_pairs <= 5.0,
            fmt::format("all-pairs max/min {:.4g} over {} pairs (lambda=0 included: {}); "
                        "spread of the per-lambda maxima {:.4f}",
                        all_pairs, r.rows.size(), has_zero ? "yes" : "no", per_lambda)};
}

Verdict resolvent_exponent()
{
    const CrossSection disc(640);
    const auto grid = logspace(5.0, 80.0, 25);
    const ResolventSweep s = resolvent_sweep(TransverseModel::circle(2.0 * M_PI), disc, DampingProfile::uniform(1.0), grid);
    std::vector<double> envelope;
    std::vector<double> pointwise;
    for (const auto& row : s.rows) {
        envelope.push_back(row.envelope);
        pointwise.push_back(row.product_norm);
    }
    const double slope = fit_resolvent_exponent(grid, envelope).slope;
    const double grid_slope = fit_resolvent_exponent(grid, pointwise).slope;
    return {std::abs(slope - 2.0) <= 0.2,
            fmt::format("slope of sup_[5,lambda] ||(A+i s)^-1|| {:.4f}; norms sampled on the grid alone {:.4f}; "
                        "{} resonance peaks",
                        slope, grid_slope, s.peaks.size())};
}

Verdict quasimode_sharpness()
{
    const CrossSection disc(640);
    const QuasimodeReport r =
        build_quasimode_family(TransverseModel::circle(2.0 * M_PI), disc, DampingProfile::uniform(1.0), 1, {4, 8, 16, 32, 64});
    const LowerBoundCheck check = verify_lower_bound(r);
    double tight16 = 0.0;
    for (const auto& e : r.entries) {
        if (e.k == 16) {
            tight16 = e.product_ratio;
        }
    }
    const double slope = r.residual_fit->slope;
    return {std::abs(slope + 2.0) <= 0.15 && check.min_product >= 1.0 - 1e-8 && tight16 <= 50.0,
            fmt::format("residual slope {:.4f}, min norm*residual {:.4f}, norm*residual at k=16 {:.4f}", slope,
                        check.min_product, tight16)};
}

Verdict decay_rate()
{
    const auto start = std::chrono::steady_clock::now();
    const TransverseModel model = TransverseModel::circle(M_PI);
    const CrossSection disc(200);
    const DampingProfile d = DampingProfile::uniform(1.0);
    auto fit_for = [&](double p, const char* x) {
        ProfileSpec spec = ProfileSpec::power_law(p, 48, XProfile::parse(x));
        spec.certification = true;
        const auto data = make_initial_data(model, disc, d, spec);
        const EnergyTrace t = evolve(model, disc, d, data, 200.0, 2.5e-3, {40, false});
        return fit_decay_exponent(t, 10.0, 150.0).exponent;
    };
    const double borderline = fit_for(2.6, "bump");
    double worst = borderline;
    std::string others;
    for (const auto& [p, x] : std::vector<std::pair<double, const char*>>{{2.6, "hermite_extension"}, {4.0, "bump"}, {4.0, "hermite_extension"}}) {
        const double e = fit_for(p, x);
        worst = std::min(worst, e);
        others += fmt::format(", power_law({}) {} {:.4f}", p, x, e);
    }
    const double elapsed = seconds_since(start);
    return {borderline >= 0.45 && borderline <= 0.70 && worst >= 0.45 && elapsed <= 600.0,
            fmt::format("borderline exponent {:.4f}{}, {:.0f} s", borderline, others, elapsed)};
}

Verdict oracle_equivalence()
{
    const int n = 200;
    const double dt = 1e-3;
    const int steps = 10000;
    const int stride = 10;
    const CrossSection disc(n);
    const DampingProfile d = DampingProfile::uniform(1.0);
    const GeneratorCoefficients c = GeneratorCoefficients::from(d);
    const TransverseModel model = TransverseModel::circle(2.0 * M_PI);
    bool pass = true;
    std::string state_text;
    std::string sup_text;
    std::string trace_text;
    for (const int k : {0, 4, 16}) {
        const auto data = make_initial_data(model, disc, d, ProfileSpec::single_mode(k, XProfile::parse("hermite_extension")));
        const double eta_sq = static_cast<double>(k * k);
        const ModeGenerator gen(disc, c, eta_sq);
        const oracle::DenseMode dense = oracle::dense_mode(n, c, eta_sq);
        const oracle::EigenPropagator exact(dense);
        const CayleyStepper stepper(gen, dt);
        const ComplexVector u0 = data.modes[0].state;
        ComplexVector u = u0;
        const double initial_sq = oracle::gram_norm_sq(dense, u0);
        double state_diff_sq = 0.0;
        double state_ref_sq = 0.0;
        double worst_sup = 0.0;
        double diff_sq = 0.0;
        double ref_sq = 0.0;
        for (int i = 1; i <= steps; ++i) {
            u = stepper.step(u);
            if (i % stride == 0) {
                const Eigen::VectorXcd exact_state = exact.at(u0, i * dt);
                const double err_sq = oracle::gram_norm_sq(dense, u - exact_state);
                const double want = oracle::gram_norm_sq(dense, exact_state);
                state_diff_sq += err_sq;
                state_ref_sq += want;
                worst_sup = std::max(worst_sup, std::sqrt(err_sq / initial_sq));
                const double got = gen.energy_norm_sq(u);
                diff_sq += (got - want) * (got - want);
                ref_sq += want * want;
            }
        }
        const double state_error = std::sqrt(state_diff_sq / state_ref_sq);
        pass = pass && state_error <= 1e-4;
        state_text += fmt::format(" k={} {:.2e}", k, state_error);
        sup_text += fmt::format(" k={} {:.2e}", k, worst_sup);
        trace_text += fmt::format(" k={} {:.2e}", k, std::sqrt(diff_sq / ref_sq));
    }
    return {pass, fmt::format("relative L2(0,10; E) state error:{}; sup_t error / |U0|:{}; energy-trace L2-in-time "
                              "error:{}",
                              state_text, sup_text, trace_text)};
}

Verdict perfect_absorption()
{
    const TransverseModel model = TransverseModel::circle(2.0 * M_PI);
    const DampingProfile d = DampingProfile::uniform(1.0);
    std::vector<double> ratios;
    std::string text;
    for (const int n : {200, 400, 800}) {
        const CrossSection disc(n);
        const auto data = make_initial_data(model, disc, d, ProfileSpec::single_mode(0, XProfile::parse("bump")));
        const double dt = disc.h() / 2.0;
        const EnergyTrace t = evolve(model, disc, d, data, 2.0, dt, {4 * n, false});
        ratios.push_back(t.e_norm.back() / t.e_norm.front());
        text += fmt::format(" N={} {:.3e}", n, ratios.back());
    }
    const bool decreasing = ratios[1] < ratios[0] && ratios[2] < ratios[1];
    return {ratios.back() <= 1e-2 && decreasing, fmt::format("E(2)/E(0):{}", text)};
}

Verdict dissipation_and_conservation()
{
    const TransverseModel model = TransverseModel::circle(2.0 * M_PI);
    const CrossSection disc(160);
    DampingProfile one_sided = DampingProfile::uniform(1.0);
    one_sided.a0_left = one_sided.a_left = 0.0;
    DampingProfile weak = DampingProfile::uniform(0.2);
    DampingProfile with_b = DampingProfile::uniform(1.0);
    with_b.b_right = with_b.b0_right = 0.5;
    double growth = 0.0;
    double drift = 0.0;
    for (const auto& d : {DampingProfile::uniform(1.0), one_sided, weak, with_b}) {
        const auto data = make_initial_data(model, disc, d, ProfileSpec::power_law(3.0, 12, XProfile::parse("hermite_extension")));
        const EnergyTrace t = evolve(model, disc, d, data, 20.0, 5e-3, {20, false});
        growth = std::max(growth, t.max_relative_growth);
        if (d.b_left == 0.0 && d.b_right == 0.0) {
            drift = std::max(drift, t.max_constraint_drift);
        }
    }
    return {growth <= 1e-12 && drift <= 1e-8,
            fmt::format("max per-step relative E-norm growth {:.2e}, max l drift {:.2e} over 4 damping setups", growth,
                        drift)};
}

// Windows containing eta, found by scanning every window whose center lies within
// the largest half-width of eta.
int count_windows(const std::vector<SpectralWindow>& cover, const std::vector<double>& centers, double widest, double eta)
{
    auto it = std::lower_bound(centers.begin(), centers.end(), eta - widest);
    int count = 0;
    for (; it != centers.end() && *it <= eta + widest; ++it) {
        const auto& w = cover[static_cast<std::size_t>(it - centers.begin())];
        count += std::abs(eta - w.center) <= w.half_width ? 1 : 0;
    }
    return count;
}

Verdict window_cover_property()
{
    std::mt19937_64 rng(20240917);
    std::uniform_real_distribution<double> lambda_dist(0.0, 100.0);
    std::uniform_real_distribution<double> eps_dist(0.1, 0.9);
    std::uniform_int_distribution<int> delta_dist(0, 2);
    int worst = 0;
    int uncovered = 0;
    std::size_t most_windows = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const double lambda = lambda_dist(rng);
        const double delta = delta_dist(rng);
        const double eps = eps_dist(rng);
        const double eta_max = std::min(10.0, 2e4 * eps / std::pow(bracket(lambda), 1.0 + delta));
        const auto cover = window_cover(lambda, delta, eps, eta_max);
        most_windows = std::max(most_windows, cover.size());
        std::vector<double> centers;
        double widest = 0.0;
        for (const auto& w : cover) {
            centers.push_back(w.center);
            widest = std::max(widest, w.half_width);
        }
        for (int i = 0; i < 10000; ++i) {
            const double eta = eta_max * i / 9999.0;
            const int m = count_windows(cover, centers, widest, eta);
            uncovered += m == 0 ? 1 : 0;
            worst = std::max(worst, m);
        }
    }
    return {uncovered == 0 && worst <= 3,
            fmt::format("200 covers, 1e4 points each: {} uncovered points, max multiplicity {}, up to {} windows",
                        uncovered, worst, most_windows)};
}

Verdict prediction_table()
{
    const bool ok = predict_rate(0.0).rate_exponent == 1.0 / 2.0 && predict_rate(1.0).rate_exponent == 1.0 / 3.0 &&
                    predict_rate(2.0).rate_exponent == 1.0 / 4.0;
    return {ok, fmt::format("(0, {}), (1, {}), (2, {})", predict_rate(0.0).rate_exponent,
                            predict_rate(1.0).rate_exponent, predict_rate(2.0).rate_exponent)};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"impedance uniformity", impedance_uniformity},
        {"overdamped estimate", overdamped_estimate},
        {"generator resolvent exponent", resolvent_exponent},
        {"quasimode sharpness", quasimode_sharpness},
        {"decay rate", decay_rate},
        {"oracle equivalence", oracle_equivalence},
        {"perfect absorption", perfect_absorption},
        {"dissipation and conservation", dissipation_and_conservation},
        {"window cover", window_cover_property},
        {"prediction table", prediction_table},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, fmt::format("error: {}", e.what())};
        }
        failures += v.pass ? 0 : 1;
        fmt::print("criterion {}: {} {} ({})\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first, v.detail);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
