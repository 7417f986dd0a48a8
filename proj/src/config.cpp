#include "prodwave/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace prodwave {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(trim(item));
    }
    return out;
}

double to_double(const std::string& v)
{
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || !std::isfinite(out)) {
        throw InvalidInput(fmt::format("cannot parse '{}' as a number", v));
    }
    return out;
}

int to_int(const std::string& v)
{
    std::size_t used = 0;
    long out = 0;
    try {
        out = std::stol(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || out < std::numeric_limits<int>::min() ||
        out > std::numeric_limits<int>::max()) {
        throw InvalidInput(fmt::format("cannot parse '{}' as an integer", v));
    }
    return static_cast<int>(out);
}

bool to_bool(const std::string& v)
{
    if (v == "true" || v == "yes" || v == "1") {
        return true;
    }
    if (v == "false" || v == "no" || v == "0") {
        return false;
    }
    throw InvalidInput(fmt::format("cannot parse '{}' as a boolean", v));
}

std::vector<double> to_doubles(const std::string& v)
{
    std::vector<double> out;
    for (const auto& item : split_list(v)) {
        out.push_back(to_double(item));
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Schema = std::map<std::string, std::map<std::string, Setter>>;

const Schema& schema()
{
    static const Schema s = {
        {"cross_section", {{"n_cells", [](RunConfig& c, const std::string& v) { c.cross_section.n_cells = to_int(v); }}}},
        {"damping",
         {
             {"a_left", [](RunConfig& c, const std::string& v) { c.damping.a_left = to_double(v); }},
             {"a_right", [](RunConfig& c, const std::string& v) { c.damping.a_right = to_double(v); }},
             {"b_left", [](RunConfig& c, const std::string& v) { c.damping.b_left = to_double(v); }},
             {"b_right", [](RunConfig& c, const std::string& v) { c.damping.b_right = to_double(v); }},
             {"a0_left", [](RunConfig& c, const std::string& v) { c.damping.a0_left = to_double(v); }},
             {"a0_right", [](RunConfig& c, const std::string& v) { c.damping.a0_right = to_double(v); }},
             {"b0_left", [](RunConfig& c, const std::string& v) { c.damping.b0_left = to_double(v); }},
             {"b0_right", [](RunConfig& c, const std::string& v) { c.damping.b0_right = to_double(v); }},
             {"c0", [](RunConfig& c, const std::string& v) { c.damping.c0 = to_double(v); }},
         }},
        {"transverse",
         {
             {"kind", [](RunConfig& c, const std::string& v) { c.transverse.kind = v; }},
             {"length", [](RunConfig& c, const std::string& v) { c.transverse.lengths = {to_double(v)}; }},
             {"lengths", [](RunConfig& c, const std::string& v) { c.transverse.lengths = to_doubles(v); }},
             {"eta_max", [](RunConfig& c, const std::string& v) { c.transverse.eta_max = to_double(v); }},
             {"max_mode", [](RunConfig& c, const std::string& v) { c.transverse.max_mode = to_int(v); }},
             {"spectrum_file", [](RunConfig& c, const std::string& v) { c.transverse.spectrum_file = v; }},
         }},
        {"sweep",
         {
             {"lambda_min", [](RunConfig& c, const std::string& v) { c.sweep.lambda_min = to_double(v); }},
             {"lambda_max", [](RunConfig& c, const std::string& v) { c.sweep.lambda_max = to_double(v); }},
             {"points", [](RunConfig& c, const std::string& v) { c.sweep.points = to_int(v); }},
             {"spacing",
              [](RunConfig& c, const std::string& v) {
                  require(v == "log" || v == "linear", fmt::format("spacing '{}' is neither log nor linear", v));
                  c.sweep.spacing = v;
              }},
             {"delta", [](RunConfig& c, const std::string& v) { c.sweep.delta = to_double(v); }},
             {"z_rule",
              [](RunConfig& c, const std::string& v) {
                  (void)ZRule::parse(v);
                  c.sweep.z_rule = v;
              }},
             {"mu0", [](RunConfig& c, const std::string& v) { c.sweep.mu0 = to_double(v); }},
             {"lambda0", [](RunConfig& c, const std::string& v) { c.sweep.lambda0 = to_double(v); }},
             {"include_perturbation",
              [](RunConfig& c, const std::string& v) { c.sweep.include_perturbation = to_bool(v); }},
             {"resolve_peaks", [](RunConfig& c, const std::string& v) { c.sweep.resolve_peaks = to_bool(v); }},
         }},
        {"evolve",
         {
             {"dt", [](RunConfig& c, const std::string& v) { c.evolve.dt = to_double(v); }},
             {"t_final", [](RunConfig& c, const std::string& v) { c.evolve.t_final = to_double(v); }},
             {"profile", [](RunConfig& c, const std::string& v) { c.evolve.profile = v; }},
             {"p", [](RunConfig& c, const std::string& v) { c.evolve.p = to_double(v); }},
             {"n_modes", [](RunConfig& c, const std::string& v) { c.evolve.n_modes = to_int(v); }},
             {"x_profile",
              [](RunConfig& c, const std::string& v) {
                  (void)XProfile::parse(v);
                  c.evolve.x_profile = v;
              }},
             {"v_profile",
              [](RunConfig& c, const std::string& v) {
                  if (!v.empty()) {
                      (void)XProfile::parse(v);
                  }
                  c.evolve.v_profile = v;
              }},
             {"sample_stride", [](RunConfig& c, const std::string& v) { c.evolve.sample_stride = to_int(v); }},
             {"fit_window",
              [](RunConfig& c, const std::string& v) {
                  const auto w = to_doubles(v);
                  require(w.size() == 2 && w[0] > 0.0 && w[0] < w[1],
                          fmt::format("fit_window '{}' must be 't_lo, t_hi' with 0 < t_lo < t_hi", v));
                  c.evolve.fit_window = std::make_pair(w[0], w[1]);
              }},
             {"delta", [](RunConfig& c, const std::string& v) { c.evolve.delta = to_double(v); }},
             {"certification", [](RunConfig& c, const std::string& v) { c.evolve.certification = to_bool(v); }},
         }},
        {"quasimode",
         {
             {"n_dirichlet", [](RunConfig& c, const std::string& v) { c.quasimode.n_dirichlet = to_int(v); }},
             {"k_list",
              [](RunConfig& c, const std::string& v) {
                  c.quasimode.k_list.clear();
                  for (const auto& item : split_list(v)) {
                      c.quasimode.k_list.push_back(to_int(item));
                  }
              }},
         }},
        {"output",
         {
             {"dir", [](RunConfig& c, const std::string& v) { c.output.dir = v; }},
             {"emit_per_mode", [](RunConfig& c, const std::string& v) { c.output.emit_per_mode = to_bool(v); }},
         }},
        {"tolerance",
         {
             {"impedance_slope_max",
              [](RunConfig& c, const std::string& v) { c.tolerance.impedance_slope_max = to_double(v); }},
             {"overdamped_spread_max",
              [](RunConfig& c, const std::string& v) { c.tolerance.overdamped_spread_max = to_double(v); }},
             {"resolvent_slope_target",
              [](RunConfig& c, const std::string& v) { c.tolerance.resolvent_slope_target = to_double(v); }},
             {"resolvent_slope_tol",
              [](RunConfig& c, const std::string& v) { c.tolerance.resolvent_slope_tol = to_double(v); }},
             {"quasimode_slope_target",
              [](RunConfig& c, const std::string& v) { c.tolerance.quasimode_slope_target = to_double(v); }},
             {"quasimode_slope_tol",
              [](RunConfig& c, const std::string& v) { c.tolerance.quasimode_slope_tol = to_double(v); }},
             {"quasimode_tightness_max",
              [](RunConfig& c, const std::string& v) { c.tolerance.quasimode_tightness_max = to_double(v); }},
             {"quasimode_slope_gap_max",
              [](RunConfig& c, const std::string& v) { c.tolerance.quasimode_slope_gap_max = to_double(v); }},
             {"decay_exponent_min",
              [](RunConfig& c, const std::string& v) { c.tolerance.decay_exponent_min = to_double(v); }},
             {"decay_exponent_max",
              [](RunConfig& c, const std::string& v) { c.tolerance.decay_exponent_max = to_double(v); }},
             {"energy_growth_max",
              [](RunConfig& c, const std::string& v) { c.tolerance.energy_growth_max = to_double(v); }},
             {"constraint_drift_max",
              [](RunConfig& c, const std::string& v) { c.tolerance.constraint_drift_max = to_double(v); }},
         }},
    };
    return s;
}

std::string num(double v) { return fmt::format("{}", v); }

std::optional<int> parse_single_mode(const std::string& text)
{
    const std::string prefix = "single_mode(";
    if (text.rfind(prefix, 0) != 0 || text.back() != ')') {
        return std::nullopt;
    }
    return to_int(trim(text.substr(prefix.size(), text.size() - prefix.size() - 1)));
}

} // namespace

RunConfig RunConfig::parse(const std::string& text, const std::string& source)
{
    RunConfig config;
    const Schema& keys = schema();
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::set<std::string> seen;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        const std::string where = fmt::format("{}:{}", source, line_no);
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw InvalidInput(fmt::format("{}: malformed section header '{}'", where, line));
            }
            section = trim(line.substr(1, line.size() - 2));
            if (!keys.contains(section)) {
                throw InvalidInput(fmt::format("{}: unknown section [{}]", where, section));
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidInput(fmt::format("{}: expected 'key = value', got '{}'", where, line));
        }
        if (section.empty()) {
            throw InvalidInput(fmt::format("{}: key outside of any section", where));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& section_keys = keys.at(section);
        const auto it = section_keys.find(key);
        if (it == section_keys.end()) {
            throw InvalidInput(fmt::format("{}: unknown key '{}' in section [{}]", where, key, section));
        }
        if (!seen.insert(section + "." + key).second) {
            throw InvalidInput(fmt::format("{}: duplicate key {}.{}", where, section, key));
        }
        try {
            it->second(config, value);
        } catch (const Error& e) {
            throw InvalidInput(fmt::format("{}: {}.{}: {}", where, section, key, e.what()));
        }
    }
    if (seen.contains("transverse.length") && seen.contains("transverse.lengths")) {
        throw InvalidInput(fmt::format("{}: give transverse.length or transverse.lengths, not both", source));
    }
    return config;
}

RunConfig RunConfig::load(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), fmt::format("cannot read config file '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

int RunConfig::require_n_cells() const
{
    require(cross_section.n_cells.has_value(), "missing key cross_section.n_cells");
    return *cross_section.n_cells;
}

CrossSection RunConfig::make_cross_section() const
{
    return build_cross_section(require_n_cells(), damping);
}

TransverseModel RunConfig::make_transverse_model() const
{
    require(transverse.kind.has_value(), "missing key transverse.kind");
    const std::string& kind = *transverse.kind;
    TransverseModel model;
    if (kind == "explicit") {
        require(!transverse.spectrum_file.empty(), "missing key transverse.spectrum_file (kind = explicit)");
        model = TransverseModel::explicit_values(read_explicit_spectrum(transverse.spectrum_file));
    } else if (kind == "circle") {
        model = TransverseModel::circle(transverse.lengths.empty() ? 2.0 * M_PI : transverse.lengths.front());
        require(transverse.lengths.size() <= 1, "transverse.lengths: circle takes one length");
    } else if (kind == "torus") {
        require(!transverse.lengths.empty(), "missing key transverse.lengths (kind = torus)");
        model = TransverseModel::torus(transverse.lengths);
    } else if (kind == "interval_dirichlet" || kind == "interval_neumann") {
        require(transverse.lengths.size() <= 1, "transverse.lengths: interval takes one length");
        model = TransverseModel::interval(transverse.lengths.empty() ? M_PI : transverse.lengths.front(),
                                          kind == "interval_dirichlet");
    } else {
        throw InvalidInput(fmt::format(
            "transverse.kind '{}' is not one of circle, torus, interval_dirichlet, interval_neumann, explicit",
            kind));
    }
    model.validate();
    return model;
}

std::vector<double> logspace(double lo, double hi, int points)
{
    require(lo > 0.0 && hi >= lo, fmt::format("logspace: need 0 < {} <= {}", lo, hi));
    require(points >= 1, "logspace: points must be positive");
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        out[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
    }
    out.front() = lo;
    out.back() = points == 1 ? lo : hi;
    return out;
}

std::vector<double> linspace(double lo, double hi, int points)
{
    require(hi >= lo, fmt::format("linspace: need {} <= {}", lo, hi));
    require(points >= 1, "linspace: points must be positive");
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        out[static_cast<std::size_t>(i)] = lo + t * (hi - lo);
    }
    return out;
}

std::vector<double> RunConfig::make_grid() const
{
    return sweep.spacing == "log" ? logspace(sweep.lambda_min, sweep.lambda_max, sweep.points)
                                  : linspace(sweep.lambda_min, sweep.lambda_max, sweep.points);
}

ProfileSpec RunConfig::make_profile() const
{
    const XProfile u = XProfile::parse(evolve.x_profile);
    const std::optional<XProfile> v =
        evolve.v_profile.empty() ? std::nullopt : std::optional<XProfile>(XProfile::parse(evolve.v_profile));
    ProfileSpec spec;
    if (const auto k = parse_single_mode(evolve.profile)) {
        spec = ProfileSpec::single_mode(*k, u, v);
    } else if (evolve.profile == "power_law") {
        spec = ProfileSpec::power_law(evolve.p, evolve.n_modes, u);
    } else if (evolve.profile == "borderline") {
        spec = ProfileSpec::borderline(evolve.n_modes, u);
    } else {
        throw InvalidInput(fmt::format(
            "evolve.profile '{}' is not one of single_mode(k), power_law, borderline", evolve.profile));
    }
    spec.v_profile = v;
    spec.certification = evolve.certification;
    return spec;
}

std::string RunConfig::echo() const
{
    std::string out;
    auto line = [&out](const std::string& key, const std::string& value) {
        out += fmt::format("{} = {}\n", key, value);
    };
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };

    out += "[cross_section]\n";
    if (cross_section.n_cells) {
        line("n_cells", std::to_string(*cross_section.n_cells));
    }
    out += "\n[damping]\n";
    line("a_left", num(damping.a_left));
    line("a_right", num(damping.a_right));
    line("b_left", num(damping.b_left));
    line("b_right", num(damping.b_right));
    line("a0_left", num(damping.a0_left));
    line("a0_right", num(damping.a0_right));
    line("b0_left", num(damping.b0_left));
    line("b0_right", num(damping.b0_right));
    line("c0", num(damping.c0));

    out += "\n[transverse]\n";
    if (transverse.kind) {
        line("kind", *transverse.kind);
    }
    if (!transverse.lengths.empty()) {
        std::vector<std::string> parts;
        for (double l : transverse.lengths) {
            parts.push_back(num(l));
        }
        line("lengths", fmt::format("{}", fmt::join(parts, ", ")));
    }
    if (transverse.eta_max) {
        line("eta_max", num(*transverse.eta_max));
    }
    if (transverse.max_mode) {
        line("max_mode", std::to_string(*transverse.max_mode));
    }
    if (!transverse.spectrum_file.empty()) {
        line("spectrum_file", transverse.spectrum_file);
    }

    out += "\n[sweep]\n";
    line("lambda_min", num(sweep.lambda_min));
    line("lambda_max", num(sweep.lambda_max));
    line("points", std::to_string(sweep.points));
    line("spacing", sweep.spacing);
    line("delta", num(sweep.delta));
    line("z_rule", sweep.z_rule);
    line("mu0", num(sweep.mu0));
    line("lambda0", num(sweep.lambda0));
    if (sweep.include_perturbation) {
        line("include_perturbation", b(*sweep.include_perturbation));
    }
    line("resolve_peaks", b(sweep.resolve_peaks));

    out += "\n[evolve]\n";
    line("dt", num(evolve.dt));
    line("t_final", num(evolve.t_final));
    line("profile", evolve.profile);
    line("p", num(evolve.p));
    line("n_modes", std::to_string(evolve.n_modes));
    line("x_profile", evolve.x_profile);
    if (!evolve.v_profile.empty()) {
        line("v_profile", evolve.v_profile);
    }
    line("sample_stride", std::to_string(evolve.sample_stride));
    if (evolve.fit_window) {
        line("fit_window", fmt::format("{}, {}", num(evolve.fit_window->first), num(evolve.fit_window->second)));
    }
    line("delta", num(evolve.delta));
    line("certification", b(evolve.certification));

    out += "\n[quasimode]\n";
    line("n_dirichlet", std::to_string(quasimode.n_dirichlet));
    line("k_list", fmt::format("{}", fmt::join(quasimode.k_list, ", ")));

    out += "\n[output]\n";
    line("dir", output.dir);
    line("emit_per_mode", b(output.emit_per_mode));

    out += "\n[tolerance]\n";
    line("impedance_slope_max", num(tolerance.impedance_slope_max));
    line("overdamped_spread_max", num(tolerance.overdamped_spread_max));
    line("resolvent_slope_target", num(tolerance.resolvent_slope_target));
    line("resolvent_slope_tol", num(tolerance.resolvent_slope_tol));
    line("quasimode_slope_target", num(tolerance.quasimode_slope_target));
    line("quasimode_slope_tol", num(tolerance.quasimode_slope_tol));
    line("quasimode_tightness_max", num(tolerance.quasimode_tightness_max));
    line("quasimode_slope_gap_max", num(tolerance.quasimode_slope_gap_max));
    line("decay_exponent_min", num(tolerance.decay_exponent_min));
    line("decay_exponent_max", num(tolerance.decay_exponent_max));
    line("energy_growth_max", num(tolerance.energy_growth_max));
    line("constraint_drift_max", num(tolerance.constraint_drift_max));
    return out;
}

} // namespace prodwave
