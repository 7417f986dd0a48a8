#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prodwave/generator.hpp"

namespace prodwave {

enum class XProfileKind { sine, bump, hermite_extension, constant };

struct XProfile {
    XProfileKind kind = XProfileKind::hermite_extension;
    int n = 1;  // sine frequency

    static XProfile parse(const std::string& text);  // "sine(2)", "bump", "hermite_extension", "constant"
    [[nodiscard]] std::string describe() const;
    [[nodiscard]] RealVector sample(const CrossSection& disc) const;
};

enum class DataFamily { single_mode, power_law };

struct ProfileSpec {
    DataFamily family = DataFamily::power_law;
    int mode = 0;          // single_mode index into the distinct transverse spectrum
    double p = 2.6;        // power_law decay, c_k = (1 + k)^{-p}
    int n_modes = 48;      // power_law: modes k = 0 .. n_modes-1
    XProfile u_profile;
    std::optional<XProfile> v_profile;  // v = 0 when absent
    /// Rejects power_law(p) with p <= 2.5, whose data is not H^2-admissible.
    bool certification = false;

    static ProfileSpec single_mode(int k, XProfile u, std::optional<XProfile> v = std::nullopt);
    static ProfileSpec power_law(double p, int n_modes, XProfile u);
    static ProfileSpec borderline(int n_modes, XProfile u) { return power_law(2.6, n_modes, u); }
};

struct ModalComponent {
    int index = 0;
    double eta = 0.0;
    int multiplicity = 1;
    Complex coefficient{1.0, 0.0};
    /// Mode state (u, v) including the coefficient, after constraint projection.
    ComplexVector state;
};

struct SobolevReport {
    /// sum mult |c|^2 ||U||_E^2.
    double energy_norm_sq = 0.0;
    /// sum mult (||v||^2 + ||grad v||^2 + eta^2 ||v||^2).
    double h1_surrogate = 0.0;
    /// sum mult (||u||^2 + ||M^{-1}(Q u + B_a v)||^2), the graph norm of the generator.
    double h2_surrogate = 0.0;
    /// Per-mode contributions to h2_surrogate are nonincreasing over the last half of the modes.
    bool tail_monotone = true;
};

struct ModalInitialData {
    std::vector<ModalComponent> modes;
    SobolevReport sobolev;
};

ModalInitialData make_initial_data(const TransverseModel& model, const CrossSection& disc,
                                   const DampingProfile& damping, const ProfileSpec& spec);

/// Implicit midpoint (Cayley) propagator (I - dt/2 A)^{-1} (I + dt/2 A) for one mode.
class CayleyStepper {
public:
    CayleyStepper(const ModeGenerator& gen, double dt);

    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] ComplexVector step(const ComplexVector& state) const;

private:
    const ModeGenerator* gen_;
    double dt_;
    TridiagonalCholesky velocity_system_;
};

ComplexVector step(const ModeGenerator& gen, const ComplexVector& state, double dt);

struct EvolveOptions {
    int sample_stride = 1;
    bool keep_per_mode = false;
};

struct EnergyTrace {
    std::vector<double> times;
    std::vector<double> energy;  // physical energy E(u, t)
    std::vector<double> e_norm;  // squared E-norm, sum over modes
    std::vector<std::vector<double>> per_mode_energy;  // [mode][sample], when kept
    std::vector<double> mode_eta;
    /// Largest per-step relative increase of a mode's squared E-norm.
    double max_relative_growth = 0.0;
    /// Largest per-step defect of the discrete dissipation identity, relative to the mode energy.
    double max_ledger_defect = 0.0;
    /// Largest drift of l over the run, relative to the l-scale of the data; 0 when no mode is constrained.
    double max_constraint_drift = 0.0;
    std::vector<std::string> warnings;
};

/// Evolves every mode with a Cayley stepper and samples the summed energies
/// every `sample_stride` steps. Requires dt <= h and t_final a multiple of dt.
EnergyTrace evolve(const TransverseModel& model, const CrossSection& disc, const DampingProfile& damping,
                   const ModalInitialData& data, double t_final, double dt, const EvolveOptions& options = {});

struct DecayFit {
    double t_lo = 0.0;
    double t_hi = 0.0;
    double exponent = 0.0;  // -slope of log E^{1/2} against log t
    double r_squared = 0.0;
    double delta = 0.0;
    double sup_ratio = 0.0;  // sup over the window of t^{1/(2+delta)} E^{1/2}
    double spread = 0.0;     // max/min of t^{1/(2+delta)} E^{1/2} over the window
    std::size_t samples = 0;
};

/// [10, min(150, K^2 / 2)] with K the largest mode index.
std::pair<double, double> default_fit_window(int k_max);

DecayFit fit_decay_exponent(const std::vector<double>& times, const std::vector<double>& energy, double t_lo,
                            double t_hi, double delta = 0.0);
DecayFit fit_decay_exponent(const EnergyTrace& trace, double t_lo, double t_hi, double delta = 0.0);

/// CSV with columns t,energy,e_norm and energy_mode_k when per-mode series are kept.
void write_trace_csv(const std::string& path, const EnergyTrace& trace, bool per_mode);

} // namespace prodwave
