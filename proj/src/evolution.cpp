#include "prodwave/evolution.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace prodwave {

XProfile XProfile::parse(const std::string& text)
{
    static const std::regex sine_re(R"(\s*sine\s*\(\s*(\d+)\s*\)\s*)");
    std::smatch m;
    if (std::regex_match(text, m, sine_re)) {
        const int n = std::stoi(m[1].str());
        require(n >= 1, "x profile: sine frequency must be at least 1");
        return {XProfileKind::sine, n};
    }
    if (text == "sine") {
        return {XProfileKind::sine, 1};
    }
    if (text == "bump") {
        return {XProfileKind::bump, 1};
    }
    if (text == "hermite_extension") {
        return {XProfileKind::hermite_extension, 1};
    }
    if (text == "constant") {
        return {XProfileKind::constant, 1};
    }
    throw InvalidInput(fmt::format("unknown x profile '{}' (expected sine(n), bump, hermite_extension or constant)", text));
}

std::string XProfile::describe() const
{
    switch (kind) {
    case XProfileKind::sine:
        return fmt::format("sine({})", n);
    case XProfileKind::bump:
        return "bump";
    case XProfileKind::hermite_extension:
        return "hermite_extension";
    case XProfileKind::constant:
        return "constant";
    }
    return "unknown";
}

RealVector XProfile::sample(const CrossSection& disc) const
{
    RealVector out(disc.n_nodes());
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        const double x = disc.x(j);
        switch (kind) {
        case XProfileKind::sine:
            out[j] = std::sin(n * M_PI * x);
            break;
        case XProfileKind::bump: {
            const double r = (x - 0.5) / 0.25;
            out[j] = std::abs(r) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
            break;
        }
        case XProfileKind::hermite_extension:
            // value 1 at x = 0 and -1 at x = 1, zero slope at both ends
            out[j] = 1.0 - 2.0 * (3.0 * x * x - 2.0 * x * x * x);
            break;
        case XProfileKind::constant:
            out[j] = 1.0;
            break;
        }
    }
    return out;
}

ProfileSpec ProfileSpec::single_mode(int k, XProfile u, std::optional<XProfile> v)
{
    ProfileSpec s;
    s.family = DataFamily::single_mode;
    s.mode = k;
    s.n_modes = 1;
    s.u_profile = u;
    s.v_profile = v;
    return s;
}

ProfileSpec ProfileSpec::power_law(double p, int n_modes, XProfile u)
{
    ProfileSpec s;
    s.family = DataFamily::power_law;
    s.p = p;
    s.n_modes = n_modes;
    s.u_profile = u;
    return s;
}

namespace {

// Removes the component along the constant state (1, 0), or along (0, 1) when
// l(1, 0) = 0, so that l(U) = 0.
void project_constraint(const ModeGenerator& gen, ComplexVector& state)
{
    const Eigen::Index n = gen.n_nodes();
    const Complex ell = gen.constraint(state);
    const double l_const = gen.constraint_of_constant();
    if (l_const > 0.0) {
        state.head(n).array() -= ell / l_const;
    } else {
        state.tail(n).array() -= ell / gen.mass().sum();
    }
}

double graph_defect_sq(const ModeGenerator& gen, const ComplexVector& state)
{
    const Eigen::Index n = gen.n_nodes();
    const ComplexVector av = gen.apply(state).tail(n);
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        sum += gen.mass()[j] * std::norm(av[j]);
    }
    return sum;
}

} // namespace

ModalInitialData make_initial_data(const TransverseModel& model, const CrossSection& disc,
                                   const DampingProfile& damping, const ProfileSpec& spec)
{
    damping.validate();
    const GeneratorCoefficients coeffs = GeneratorCoefficients::from(damping);
    std::vector<int> indices;
    std::vector<double> coefficients;
    if (spec.family == DataFamily::single_mode) {
        require(spec.mode >= 0, "initial data: mode index must be nonnegative");
        indices.push_back(spec.mode);
        coefficients.push_back(1.0);
    } else {
        require(spec.n_modes >= 1, "initial data: power_law needs at least one mode");
        require(std::isfinite(spec.p) && spec.p > 0.0, "initial data: power_law exponent must be positive");
        require(!spec.certification || spec.p > 2.5,
                fmt::format("initial data: power_law({}) is not H^2-admissible; decay certification needs p > 2.5",
                            spec.p));
        require(!spec.certification || spec.u_profile.kind != XProfileKind::constant,
                "initial data: the constant x profile violates the damped boundary condition; decay certification "
                "needs sine(n), bump or hermite_extension");
        for (int k = 0; k < spec.n_modes; ++k) {
            indices.push_back(k);
            coefficients.push_back(std::pow(1.0 + k, -spec.p));
        }
    }
    const auto spectrum = first_spectral_values(model, static_cast<std::size_t>(*std::max_element(indices.begin(), indices.end())) + 1);
    const RealVector u = spec.u_profile.sample(disc);
    const RealVector v = spec.v_profile ? spec.v_profile->sample(disc) : RealVector::Zero(disc.n_nodes());
    const Eigen::Index n = disc.n_nodes();

    ModalInitialData data;
    std::vector<double> h2_terms;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& sv = spectrum[static_cast<std::size_t>(indices[i])];
        const ModeGenerator gen(disc, coeffs, sv.eta * sv.eta);
        ModalComponent c;
        c.index = indices[i];
        c.eta = sv.eta;
        c.multiplicity = sv.multiplicity;
        c.coefficient = coefficients[i];
        c.state.resize(2 * n);
        c.state.head(n) = c.coefficient * u.cast<Complex>();
        c.state.tail(n) = c.coefficient * v.cast<Complex>();
        if (gen.constraint_active()) {
            project_constraint(gen, c.state);
        }
        const ComplexVector cu = c.state.head(n);
        const ComplexVector cv = c.state.tail(n);
        const double mult = sv.multiplicity;
        data.sobolev.energy_norm_sq += mult * gen.energy_norm_sq(c.state);
        data.sobolev.h1_surrogate +=
            mult * ((1.0 + sv.eta * sv.eta) * disc.l2_norm_sq(cv) + disc.gradient_energy(cv));
        const double h2 = mult * (disc.l2_norm_sq(cu) + graph_defect_sq(gen, c.state));
        h2_terms.push_back(h2);
        data.sobolev.h2_surrogate += h2;
        data.modes.push_back(std::move(c));
    }
    for (std::size_t i = h2_terms.size() / 2 + 1; i < h2_terms.size(); ++i) {
        if (h2_terms[i] > h2_terms[i - 1] * (1.0 + 1e-12)) {
            data.sobolev.tail_monotone = false;
        }
    }
    return data;
}

namespace {

double half_step(double dt)
{
    require(dt > 0.0 && std::isfinite(dt), "step: dt must be positive");
    return 0.5 * dt;
}

TridiagonalCholesky velocity_matrix(const ModeGenerator& gen, double tau)
{
    const Eigen::Index n = gen.n_nodes();
    RealVector diag = gen.mass() + tau * tau * gen.q_diag();
    diag[0] += tau * gen.coefficients().a_left;
    diag[n - 1] += tau * gen.coefficients().a_right;
    return {diag, tau * tau * gen.q_off()};
}

} // namespace

CayleyStepper::CayleyStepper(const ModeGenerator& gen, double dt)
    : gen_(&gen), dt_(dt), velocity_system_(velocity_matrix(gen, half_step(dt)))
{
}

ComplexVector CayleyStepper::step(const ComplexVector& state) const
{
    const Eigen::Index n = gen_->n_nodes();
    const double tau = 0.5 * dt_;
    const RealVector& w = gen_->mass();
    const RealVector& qd = gen_->q_diag();
    const RealVector& qo = gen_->q_off();
    const double a_left = gen_->coefficients().a_left;
    const double a_right = gen_->coefficients().a_right;
    const auto q_apply = [&](const auto& x, Eigen::Index i) {
        Complex y = qd[i] * x[i];
        if (i > 0) {
            y += qo[i - 1] * x[i - 1];
        }
        if (i + 1 < n) {
            y += qo[i] * x[i + 1];
        }
        return y;
    };
    const auto u = state.head(n);
    const auto v = state.tail(n);
    ComplexVector r_u = u + tau * v;
    ComplexVector rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Complex force = q_apply(u, i);
        if (i == 0) {
            force += a_left * v[0];
        }
        if (i == n - 1) {
            force += a_right * v[n - 1];
        }
        rhs[i] = w[i] * v[i] - tau * force - tau * q_apply(r_u, i);
    }
    velocity_system_.solve_in_place(rhs);
    ComplexVector out(2 * n);
    out.head(n) = r_u + tau * rhs;
    out.tail(n) = rhs;
    return out;
}

ComplexVector step(const ModeGenerator& gen, const ComplexVector& state, double dt)
{
    return CayleyStepper(gen, dt).step(state);
}

namespace {

struct ModeRun {
    std::vector<double> energy;
    std::vector<double> e_norm;
    double max_growth = 0.0;
    double max_ledger = 0.0;
    double max_drift = 0.0;
    bool constrained = false;
};

} // namespace

EnergyTrace evolve(const TransverseModel& model, const CrossSection& disc, const DampingProfile& damping,
                   const ModalInitialData& data, double t_final, double dt, const EvolveOptions& options)
{
    damping.validate();
    model.validate();
    require(dt > 0.0 && std::isfinite(dt), "evolve: dt must be positive");
    require(dt <= disc.h() * (1.0 + 1e-12), fmt::format("evolve: dt = {} exceeds the grid spacing h = {}", dt, disc.h()));
    require(t_final > 0.0, "evolve: t_final must be positive");
    require(options.sample_stride >= 1, "evolve: sample_stride must be at least 1");
    require(!data.modes.empty(), "evolve: initial data has no modes");
    const double steps_real = t_final / dt;
    const auto steps = static_cast<long>(std::llround(steps_real));
    require(std::abs(steps_real - static_cast<double>(steps)) <= 1e-9 * steps_real,
            fmt::format("evolve: t_final = {} is not a multiple of dt = {}", t_final, dt));

    const auto spectrum = transverse_eigenvalues(model, data.modes.back().eta + 1.0);
    for (const auto& m : data.modes) {
        const bool present = std::any_of(spectrum.begin(), spectrum.end(), [&](const SpectralValue& s) {
            return std::abs(s.eta - m.eta) <= 1e-12 * std::max(1.0, m.eta);
        });
        require(present, fmt::format("evolve: mode eta = {} is not in the spectrum of {}", m.eta, model.describe()));
        require(m.state.size() == 2 * disc.n_nodes(), "evolve: mode state does not match the grid");
    }

    const GeneratorCoefficients coeffs = GeneratorCoefficients::from(damping);
    const std::size_t n_modes = data.modes.size();
    std::vector<ModeRun> runs(n_modes);
    parallel_for(n_modes, [&](std::size_t k) {
        const auto& mode = data.modes[k];
        const ModeGenerator gen(disc, coeffs, mode.eta * mode.eta);
        const CayleyStepper stepper(gen, dt);
        const double mult = mode.multiplicity;
        ModeRun& run = runs[k];
        run.constrained = gen.constraint_active();
        ComplexVector state = mode.state;
        const Complex ell0 = gen.constraint(state);
        const Eigen::Index n = gen.n_nodes();
        double ell_scale = gen.coefficients().a_left * std::abs(state[0]) +
                           gen.coefficients().a_right * std::abs(state[n - 1]);
        for (Eigen::Index j = 0; j < n; ++j) {
            ell_scale += gen.mass()[j] * std::abs(state[n + j]);
        }
        ell_scale = std::max(ell_scale, std::sqrt(gen.energy_norm_sq(state)));
        double e_prev = gen.energy_norm_sq(state);
        run.energy.push_back(mult * gen.physical_energy(state));
        run.e_norm.push_back(mult * e_prev);
        for (long s = 1; s <= steps; ++s) {
            ComplexVector next = stepper.step(state);
            const double e_next = gen.energy_norm_sq(next);
            if (e_prev > 0.0) {
                run.max_growth = std::max(run.max_growth, (e_next - e_prev) / e_prev);
                const ComplexVector mid = 0.5 * (state + next);
                const double ledger = e_next - e_prev + 2.0 * dt * gen.boundary_dissipation(mid);
                run.max_ledger = std::max(run.max_ledger, std::abs(ledger) / e_prev);
            }
            if (run.constrained && ell_scale > 0.0) {
                run.max_drift = std::max(run.max_drift, std::abs(gen.constraint(next) - ell0) / ell_scale);
            }
            state = std::move(next);
            e_prev = e_next;
            if (s % options.sample_stride == 0 || s == steps) {
                run.energy.push_back(mult * gen.physical_energy(state));
                run.e_norm.push_back(mult * e_prev);
            }
        }
    });

    EnergyTrace trace;
    trace.times.push_back(0.0);
    for (long s = 1; s <= steps; ++s) {
        if (s % options.sample_stride == 0 || s == steps) {
            trace.times.push_back(static_cast<double>(s) * dt);
        }
    }
    trace.energy.assign(trace.times.size(), 0.0);
    trace.e_norm.assign(trace.times.size(), 0.0);
    for (std::size_t k = 0; k < n_modes; ++k) {
        const auto& run = runs[k];
        for (std::size_t i = 0; i < trace.times.size(); ++i) {
            trace.energy[i] += run.energy[i];
            trace.e_norm[i] += run.e_norm[i];
        }
        trace.mode_eta.push_back(data.modes[k].eta);
        if (options.keep_per_mode) {
            trace.per_mode_energy.push_back(run.energy);
        }
        trace.max_relative_growth = std::max(trace.max_relative_growth, run.max_growth);
        trace.max_ledger_defect = std::max(trace.max_ledger_defect, run.max_ledger);
        trace.max_constraint_drift = std::max(trace.max_constraint_drift, run.max_drift);
        if (run.max_growth > 1e-12) {
            trace.warnings.push_back(fmt::format("mode eta = {}: E-norm grew by {:.3e} relative in one step",
                                                 data.modes[k].eta, run.max_growth));
        }
    }
    return trace;
}

std::pair<double, double> default_fit_window(int k_max)
{
    return {10.0, std::min(150.0, 0.5 * static_cast<double>(k_max) * k_max)};
}

DecayFit fit_decay_exponent(const std::vector<double>& times, const std::vector<double>& energy, double t_lo,
                            double t_hi, double delta)
{
    require(times.size() == energy.size() && !times.empty(), "fit_decay_exponent: inconsistent trace");
    require(t_lo > 0.0 && t_lo < t_hi, fmt::format("fit_decay_exponent: invalid window [{}, {}]", t_lo, t_hi));
    require(t_hi <= times.back() * (1.0 + 1e-12),
            fmt::format("fit_decay_exponent: window end {} lies beyond the trace end {}", t_hi, times.back()));
    require(delta >= 0.0, "fit_decay_exponent: delta must be nonnegative");
    const double floor = 1e-24 * energy.front();
    std::vector<double> t;
    std::vector<double> root;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_lo || times[i] > t_hi) {
            continue;
        }
        require(energy[i] >= floor && energy[i] > 0.0,
                fmt::format("fit_decay_exponent: energy {:.3e} at t = {} is at the round-off floor", energy[i],
                            times[i]));
        t.push_back(times[i]);
        root.push_back(std::sqrt(energy[i]));
    }
    require(t.size() >= 20, fmt::format("fit_decay_exponent: window holds {} samples, at least 20 are required",
                                        t.size()));
    const auto fit = fit_power_law(t, root);
    require(fit.has_value(), "fit_decay_exponent: degenerate window");
    DecayFit out;
    out.t_lo = t_lo;
    out.t_hi = t_hi;
    out.exponent = -fit->slope;
    out.r_squared = fit->r_squared;
    out.delta = delta;
    out.samples = t.size();
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double scaled = std::pow(t[i], 1.0 / (2.0 + delta)) * root[i];
        out.sup_ratio = std::max(out.sup_ratio, scaled);
        lo = std::min(lo, scaled);
    }
    out.spread = out.sup_ratio / lo;
    return out;
}

DecayFit fit_decay_exponent(const EnergyTrace& trace, double t_lo, double t_hi, double delta)
{
    return fit_decay_exponent(trace.times, trace.energy, t_lo, t_hi, delta);
}

void write_trace_csv(const std::string& path, const EnergyTrace& trace, bool per_mode)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), fmt::format("cannot open '{}' for writing", path));
    const bool modes = per_mode && !trace.per_mode_energy.empty();
    out << "t,energy,e_norm";
    if (modes) {
        for (std::size_t k = 0; k < trace.per_mode_energy.size(); ++k) {
            out << ",energy_mode_" << k;
        }
    }
    out << '\n';
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        fmt::print(out, "{:.17g},{:.17g},{:.17g}", trace.times[i], trace.energy[i], trace.e_norm[i]);
        if (modes) {
            for (const auto& series : trace.per_mode_energy) {
                fmt::print(out, ",{:.17g}", series[i]);
            }
        }
        out << '\n';
    }
}

} // namespace prodwave
