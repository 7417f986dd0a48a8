#include "prodwave/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "prodwave/config.hpp"
#include "prodwave/quasimode.hpp"

namespace prodwave {

RatePrediction predict_rate(double delta)
{
    require(std::isfinite(delta) && delta >= 0.0, fmt::format("predict_rate: delta = {} must be nonnegative", delta));
    for (const auto& row : rate_table()) {
        if (row.delta == delta) {
            return row;
        }
    }
    return {delta, 1.0 / (2.0 + delta), "untabulated delta, 1/(2+delta)"};
}

const std::vector<RatePrediction>& rate_table()
{
    static const std::vector<RatePrediction> table = {
        {0.0, 1.0 / 2.0, "compact cross-section with geometric control, t^{-1/2}"},
        {1.0, 1.0 / 3.0, "cross-section with C^1 boundary, t^{-1/3}"},
        {2.0, 1.0 / 4.0, "Bunimovich stadium cross-section, t^{-1/4}"},
    };
    return table;
}

namespace {

namespace fs = std::filesystem;

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Report {
    explicit Report(std::string report_name = {}) : name(std::move(report_name)) {}

    std::string name;
    std::vector<std::string> results;
    std::vector<Check> checks;
    std::vector<std::string> artifacts;

    template <typename... Args>
    void add(fmt::format_string<Args...> f, Args&&... args)
    {
        results.push_back(fmt::format(f, std::forward<Args>(args)...));
    }
    void check(std::string check_name, bool pass, std::string detail)
    {
        checks.push_back({std::move(check_name), pass, std::move(detail)});
    }
    [[nodiscard]] bool passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }
};

std::string fit_text(const std::optional<PowerLawFit>& fit)
{
    if (!fit) {
        return "unavailable";
    }
    return fmt::format("slope {:.6f} intercept {:.6f} r_squared {:.6f} points {}", fit->slope, fit->intercept,
                       fit->r_squared, fit->points);
}

std::string artifact(const RunConfig& config, Report& report, const std::string& file)
{
    report.artifacts.push_back(file);
    return (fs::path(config.output.dir) / file).string();
}

// The report is itself a valid config: everything after the echo is a comment.
void write_report(const RunConfig& config, const Report& report, std::ostream& out)
{
    const std::string path = (fs::path(config.output.dir) / (report.name + "_report.txt")).string();
    std::ofstream file(path);
    require(static_cast<bool>(file), fmt::format("cannot open '{}' for writing", path));
    fmt::print(file, "# prodwave {}\n\n{}\n# results\n", report.name, config.echo());
    for (const auto& r : report.results) {
        fmt::print(file, "# {}\n", r);
    }
    for (const auto& a : report.artifacts) {
        fmt::print(file, "# artifact: {}\n", a);
    }
    for (const auto& c : report.checks) {
        const std::string line = fmt::format("check {}: {} ({})", c.name, c.pass ? "PASS" : "FAIL", c.detail);
        fmt::print(file, "# {}\n", line);
        fmt::print(out, "{}\n", line);
    }
    fmt::print(file, "# status: {}\n", report.passed() ? "PASS" : "FAIL");
    fmt::print(out, "report: {}\n", path);
}

Report impedance_command(const RunConfig& config)
{
    Report report{"impedance"};
    const CrossSection disc = config.make_cross_section();
    ImpedanceOptions options;
    options.mu0 = config.sweep.mu0;
    options.include_perturbation = config.sweep.include_perturbation.value_or(false);
    const SweepResult result = sweep_impedance(disc, config.damping, config.make_grid(), config.sweep.delta, options);
    write_sweep_csv(artifact(config, report, "impedance.csv"), result);
    write_sweep_summary(artifact(config, report, "impedance_summary.json"), result);
    report.add("fit: {}", fit_text(result.fit));
    report.add("max_ratio: {:.9g} at mu = {:.9g}", result.max_ratio, result.argmax_parameter);
    const double tol = config.tolerance.impedance_slope_max;
    report.check("impedance_slope", result.fit && std::abs(result.fit->slope) <= tol,
                 result.fit ? fmt::format("|slope| = {:.4f}, limit {}", std::abs(result.fit->slope), tol)
                            : "no fit");
    return report;
}

Report overdamped_command(const RunConfig& config)
{
    Report report{"overdamped"};
    const CrossSection disc = config.make_cross_section();
    OverdampedOptions options;
    options.lambda0 = config.sweep.lambda0;
    options.include_perturbation = config.sweep.include_perturbation.value_or(true);
    const SweepResult result = overdamped_sweep(disc, config.damping, config.make_grid(),
                                                ZRule::parse(config.sweep.z_rule), config.sweep.delta, options);
    write_sweep_csv(artifact(config, report, "overdamped.csv"), result);
    write_sweep_summary(artifact(config, report, "overdamped_summary.json"), result);
    const double spread = result.max_ratio / result.min_of_parameter_max;
    report.add("fit: {}", fit_text(result.fit));
    report.add("max_ratio: {:.9g} at lambda = {:.9g}", result.max_ratio, result.argmax_parameter);
    report.add("spread: {:.6f}", spread);
    report.check("overdamped_spread", spread <= config.tolerance.overdamped_spread_max,
                 fmt::format("max/min = {:.4f}, limit {}", spread, config.tolerance.overdamped_spread_max));
    return report;
}

Report resolvent_command(const RunConfig& config)
{
    Report report{"resolvent"};
    const CrossSection disc = config.make_cross_section();
    const TransverseModel model = config.make_transverse_model();
    config.damping.validate();
    ResolventSweepOptions options;
    options.resolve_peaks = config.sweep.resolve_peaks;
    const auto grid = config.make_grid();
    const ResolventSweep sweep = resolvent_sweep(model, disc, config.damping, grid, options);
    write_resolvent_csv(artifact(config, report, "resolvent.csv"), sweep);

    std::vector<double> lambdas;
    std::vector<double> pointwise;
    std::vector<double> envelope;
    for (const auto& row : sweep.rows) {
        lambdas.push_back(row.lambda);
        pointwise.push_back(row.product_norm);
        envelope.push_back(row.envelope);
    }
    const PowerLawFit pointwise_fit = fit_resolvent_exponent(lambdas, pointwise);
    const PowerLawFit envelope_fit = fit_resolvent_exponent(lambdas, envelope);
    report.add("transverse: {}", model.describe());
    report.add("pointwise fit: {}", fit_text(pointwise_fit));
    report.add("envelope fit: {}", fit_text(envelope_fit));
    for (const auto& peak : sweep.peaks) {
        report.add("peak: eta {:.9g} eigenvalue {:.9g}{:+.9g}i frequency {:.9g} norm {:.9g}", peak.eta,
                   peak.eigenvalue.real(), peak.eigenvalue.imag(), peak.frequency, peak.norm);
    }
    const double target = config.tolerance.resolvent_slope_target;
    const double tol = config.tolerance.resolvent_slope_tol;
    report.check("resolvent_slope", std::abs(envelope_fit.slope - target) <= tol,
                 fmt::format("envelope slope {:.4f}, target {} +- {}", envelope_fit.slope, target, tol));
    return report;
}

Report spectrum_command(const RunConfig& config)
{
    Report report{"spectrum"};
    const CrossSection disc = config.make_cross_section();
    const TransverseModel model = config.make_transverse_model();
    config.damping.validate();
    std::vector<SpectralValue> values;
    if (config.transverse.max_mode) {
        require(*config.transverse.max_mode >= 0, "transverse.max_mode must be nonnegative");
        values = first_spectral_values(model, static_cast<std::size_t>(*config.transverse.max_mode) + 1);
    } else if (config.transverse.eta_max) {
        values = transverse_eigenvalues(model, *config.transverse.eta_max);
    } else {
        throw InvalidInput("missing key transverse.eta_max or transverse.max_mode");
    }
    write_spectrum_csv(artifact(config, report, "spectrum.csv"), values);

    std::vector<double> etas;
    std::vector<ModeSpectrum> spectra(values.size());
    for (const auto& v : values) {
        etas.push_back(v.eta);
    }
    parallel_for(values.size(), [&](std::size_t i) {
        spectra[i] = mode_spectrum(assemble_mode_generator(disc, config.damping, etas[i] * etas[i]));
    });
    write_abscissa_csv(artifact(config, report, "abscissa.csv"), etas, spectra);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spectra.size(); ++i) {
        write_eigenvalues_csv(artifact(config, report, fmt::format("eigenvalues_k{}.csv", i)), spectra[i]);
        report.add("mode {}: eta {:.9g} multiplicity {} abscissa {:.9g}", i, etas[i], values[i].multiplicity,
                   spectra[i].abscissa);
        worst = std::max(worst, spectra[i].abscissa);
    }
    report.add("transverse: {}", model.describe());
    report.check("dissipative_spectrum", worst <= 1e-10, fmt::format("largest abscissa {:.6e}", worst));
    return report;
}

Report evolve_command(const RunConfig& config)
{
    Report report{"evolve"};
    const CrossSection disc = config.make_cross_section();
    const TransverseModel model = config.make_transverse_model();
    const ProfileSpec spec = config.make_profile();
    const ModalInitialData data = make_initial_data(model, disc, config.damping, spec);
    EvolveOptions options;
    options.sample_stride = config.evolve.sample_stride;
    options.keep_per_mode = config.output.emit_per_mode;
    const EnergyTrace trace = evolve(model, disc, config.damping, data, config.evolve.t_final, config.evolve.dt, options);
    write_trace_csv(artifact(config, report, "trace.csv"), trace, config.output.emit_per_mode);

    int k_max = 0;
    for (const auto& m : data.modes) {
        k_max = std::max(k_max, m.index);
    }
    const auto window = config.evolve.fit_window.value_or(default_fit_window(k_max));
    report.add("transverse: {}", model.describe());
    report.add("modes: {} (largest index {})", data.modes.size(), k_max);
    report.add("initial energy norm: {:.9g}", data.sobolev.energy_norm_sq);
    report.add("h1 surrogate: {:.9g}", data.sobolev.h1_surrogate);
    report.add("h2 surrogate: {:.9g}", data.sobolev.h2_surrogate);
    report.add("max relative growth: {:.3e}", trace.max_relative_growth);
    report.add("max ledger defect: {:.3e}", trace.max_ledger_defect);
    report.add("max constraint drift: {:.3e}", trace.max_constraint_drift);
    for (const auto& w : trace.warnings) {
        report.add("warning: {}", w);
    }

    const auto& tol = config.tolerance;
    report.check("energy_monotone", trace.max_relative_growth <= tol.energy_growth_max,
                 fmt::format("growth {:.3e}, limit {}", trace.max_relative_growth, tol.energy_growth_max));
    report.check("constraint_conserved", trace.max_constraint_drift <= tol.constraint_drift_max,
                 fmt::format("drift {:.3e}, limit {}", trace.max_constraint_drift, tol.constraint_drift_max));

    if (spec.family == DataFamily::power_law) {
        const DecayFit fit = fit_decay_exponent(trace, window.first, window.second, config.evolve.delta);
        report.add("decay fit: window [{}, {}] exponent {:.6f} r_squared {:.6f} samples {}", fit.t_lo, fit.t_hi,
                   fit.exponent, fit.r_squared, fit.samples);
        report.add("rate check: sup t^(1/(2+delta)) E^(1/2) = {:.6g}, spread {:.4f}", fit.sup_ratio, fit.spread);
        report.check("decay_exponent",
                     fit.exponent >= tol.decay_exponent_min && fit.exponent <= tol.decay_exponent_max,
                     fmt::format("exponent {:.4f}, range [{}, {}]", fit.exponent, tol.decay_exponent_min,
                                 tol.decay_exponent_max));
    } else {
        try {
            const DecayFit fit = fit_decay_exponent(trace, window.first, window.second, config.evolve.delta);
            report.add("decay fit: window [{}, {}] exponent {:.6f} r_squared {:.6f} samples {}", fit.t_lo,
                       fit.t_hi, fit.exponent, fit.r_squared, fit.samples);
        } catch (const InvalidInput& e) {
            report.add("decay fit: unavailable ({})", e.what());
        }
    }
    return report;
}

Report quasimode_command(const RunConfig& config)
{
    Report report{"quasimode"};
    const CrossSection disc = config.make_cross_section();
    const TransverseModel model = config.make_transverse_model();
    const QuasimodeReport qm =
        build_quasimode_family(model, disc, config.damping, config.quasimode.n_dirichlet, config.quasimode.k_list);
    write_quasimode_csv(artifact(config, report, "quasimode.csv"), qm);
    report.add("transverse: {}", model.describe());
    report.add("dirichlet mode: n = {} mu = {:.9g}", qm.n, qm.mu);
    report.add("residual fit: {}", fit_text(qm.residual_fit));
    report.add("resolvent norm fit: {}", fit_text(qm.norm_fit));

    const auto& tol = config.tolerance;
    try {
        const LowerBoundCheck lb = verify_lower_bound(qm);
        for (const auto& row : lb.table) {
            report.add("{}", row);
        }
        report.add("{}", lb.conclusion);
        report.check("lower_bound", true, fmt::format("min norm*residual {:.6f}", lb.min_product));
        report.check("slope_agreement", lb.slope_gap <= tol.quasimode_slope_gap_max,
                     fmt::format("gap {:.4f}, limit {}", lb.slope_gap, tol.quasimode_slope_gap_max));
    } catch (const DiscretizationInconsistency& e) {
        report.check("lower_bound", false, e.what());
    }
    double tightness = 0.0;
    for (const auto& e : qm.entries) {
        tightness = std::max(tightness, e.product_ratio);
    }
    report.check("tightness", tightness <= tol.quasimode_tightness_max,
                 fmt::format("max norm*residual {:.4f}, limit {}", tightness, tol.quasimode_tightness_max));
    const double slope = qm.residual_fit ? qm.residual_fit->slope : std::numeric_limits<double>::quiet_NaN();
    report.check("residual_slope", std::abs(slope - tol.quasimode_slope_target) <= tol.quasimode_slope_tol,
                 fmt::format("slope {:.4f}, target {} +- {}", slope, tol.quasimode_slope_target,
                             tol.quasimode_slope_tol));
    return report;
}

int run_pipeline(const std::string& name, const std::string& config_path, const std::string& out_dir,
                 std::ostream& out)
{
    RunConfig config = RunConfig::load(config_path);
    if (!out_dir.empty()) {
        config.output.dir = out_dir;
    }
    fs::create_directories(config.output.dir);
    Report report;
    if (name == "impedance-sweep") {
        report = impedance_command(config);
    } else if (name == "overdamped-sweep") {
        report = overdamped_command(config);
    } else if (name == "resolvent-sweep") {
        report = resolvent_command(config);
    } else if (name == "spectrum") {
        report = spectrum_command(config);
    } else if (name == "evolve") {
        report = evolve_command(config);
    } else {
        report = quasimode_command(config);
    }
    write_report(config, report, out);
    return report.passed() ? exit_ok : exit_tolerance_failure;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Transverse resolvent and energy decay laboratory", "prodwave"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 0;
    app.add_option("--threads", threads, "Worker thread cap, 0 for all cores")->check(CLI::NonNegativeNumber);

    std::string config_path;
    std::string out_dir;
    const std::vector<std::pair<std::string, std::string>> pipelines = {
        {"impedance-sweep", "Classical impedance resolvent sweep over mu"},
        {"overdamped-sweep", "Overdamped impedance sweep over (lambda, z)"},
        {"resolvent-sweep", "Product generator resolvent norms over lambda"},
        {"spectrum", "Transverse spectrum and per-mode generator eigenvalues"},
        {"evolve", "Cayley evolution of modal initial data and decay fit"},
        {"quasimode", "Quasimode family and resolvent lower bound"},
    };
    for (const auto& [name, help] : pipelines) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", config_path, "INI configuration file")->required();
        sub->add_option("-o,--out", out_dir, "Output directory, overrides output.dir");
    }
    double delta = 0.0;
    CLI::App* predict = app.add_subcommand("predict", "Decay rate predicted by a resolvent exponent delta");
    predict->add_option("--delta", delta, "Transverse resolvent exponent")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? exit_ok : exit_input_error;
    }

    try {
        set_max_threads(threads > 0 ? threads : static_cast<int>(std::max(1U, std::thread::hardware_concurrency())));
        if (predict->parsed()) {
            const RatePrediction rate = predict_rate(delta);
            fmt::print(out, "rate exponent {}\nprovenance: {}\n", rate.rate_exponent, rate.provenance);
            return exit_ok;
        }
        return run_pipeline(app.get_subcommands().front()->get_name(), config_path, out_dir, out);
    } catch (const Error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return exit_input_error;
    } catch (const fs::filesystem_error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return exit_input_error;
    }
}

int run(int argc, const char* const* argv)
{
    return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

} // namespace prodwave
