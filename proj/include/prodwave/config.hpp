#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prodwave/cross_section.hpp"
#include "prodwave/evolution.hpp"
#include "prodwave/transverse.hpp"

namespace prodwave {

struct CrossSectionConfig {
    std::optional<int> n_cells;
};

struct TransverseConfig {
    std::optional<std::string> kind;  // circle, torus, interval_dirichlet, interval_neumann, explicit
    std::vector<double> lengths;
    std::optional<double> eta_max;
    std::optional<int> max_mode;
    std::string spectrum_file;
};

struct SweepConfig {
    double lambda_min = 2.0;
    double lambda_max = 100.0;
    int points = 60;
    std::string spacing = "log";
    double delta = 0.0;
    std::string z_rule = "-50, 0, 0.5*l2, l2";
    double mu0 = 1.0;
    double lambda0 = 1.0;
    std::optional<bool> include_perturbation;
    bool resolve_peaks = true;
};

struct EvolveConfig {
    double dt = 2.5e-3;
    double t_final = 200.0;
    std::string profile = "borderline";  // borderline, power_law, single_mode(k)
    double p = 2.6;
    int n_modes = 48;
    std::string x_profile = "bump";
    std::string v_profile;  // empty: zero velocity
    int sample_stride = 40;
    std::optional<std::pair<double, double>> fit_window;
    double delta = 0.0;
    bool certification = true;
};

struct QuasimodeConfig {
    int n_dirichlet = 1;
    std::vector<int> k_list{4, 8, 16, 32, 64};
};

struct OutputConfig {
    std::string dir = "out";
    bool emit_per_mode = false;
};

/// Pass/fail thresholds; defaults are the acceptance tolerances.
struct ToleranceConfig {
    double impedance_slope_max = 0.15;
    double overdamped_spread_max = 5.0;
    double resolvent_slope_target = 2.0;
    double resolvent_slope_tol = 0.2;
    double quasimode_slope_target = -2.0;
    double quasimode_slope_tol = 0.15;
    double quasimode_tightness_max = 50.0;
    double quasimode_slope_gap_max = 0.3;
    double decay_exponent_min = 0.45;
    double decay_exponent_max = 0.70;
    double energy_growth_max = 1e-12;
    double constraint_drift_max = 1e-8;
};

/// Parsed INI configuration. Sections and keys outside the schema are errors.
struct RunConfig {
    CrossSectionConfig cross_section;
    DampingProfile damping;
    TransverseConfig transverse;
    SweepConfig sweep;
    EvolveConfig evolve;
    QuasimodeConfig quasimode;
    OutputConfig output;
    ToleranceConfig tolerance;

    /// Parses "[section]" headers and "key = value" lines; '#' starts a comment.
    /// Errors carry "<source>:<line>" diagnostics.
    static RunConfig parse(const std::string& text, const std::string& source = "<config>");
    static RunConfig load(const std::string& path);

    [[nodiscard]] int require_n_cells() const;
    [[nodiscard]] CrossSection make_cross_section() const;
    [[nodiscard]] TransverseModel make_transverse_model() const;
    /// lambda grid from the sweep section.
    [[nodiscard]] std::vector<double> make_grid() const;
    [[nodiscard]] ProfileSpec make_profile() const;

    /// Complete configuration in INI form, fixed section and key order.
    [[nodiscard]] std::string echo() const;
};

std::vector<double> logspace(double lo, double hi, int points);
std::vector<double> linspace(double lo, double hi, int points);

} // namespace prodwave
