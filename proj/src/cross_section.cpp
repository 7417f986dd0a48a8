#include "prodwave/cross_section.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

namespace prodwave {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_nonnegative(double value, const char* name)
{
    require(std::isfinite(value) && value >= 0.0, fmt::format("damping: {} must be a nonnegative real, got {}", name, value));
}

} // namespace

DampingProfile DampingProfile::uniform(double value)
{
    DampingProfile d;
    d.a0_left = d.a0_right = value;
    d.a_left = d.a_right = value;
    d.b0_left = d.b0_right = 0.0;
    d.b_left = d.b_right = 0.0;
    d.c0 = 1.0;
    return d;
}

void DampingProfile::validate() const
{
    require_nonnegative(a0_left, "a0_left");
    require_nonnegative(a0_right, "a0_right");
    require_nonnegative(b0_left, "b0_left");
    require_nonnegative(b0_right, "b0_right");
    require_nonnegative(a_left, "a_left");
    require_nonnegative(a_right, "a_right");
    require_nonnegative(b_left, "b_left");
    require_nonnegative(b_right, "b_right");
    require(std::isfinite(c0) && c0 > 0.0, fmt::format("damping: c0 must be positive, got {}", c0));
    require(a0_left > 0.0 || a0_right > 0.0, "damping: a0 vanishes at both endpoints");
    require(b0_left <= a0_left && b0_right <= a0_right, "damping: b0 must not exceed a0");
    const auto check_end = [this](double a0, double a, double b, const char* side) {
        require(c0 * a0 <= a && a <= a0,
                fmt::format("damping: {} endpoint violates c0*a0 <= a <= a0 (a0={}, a={}, c0={})", side, a0, a, c0));
        require(b <= a0, fmt::format("damping: {} endpoint violates b <= a0 (a0={}, b={})", side, a0, b));
    };
    check_end(a0_left, a_left, b_left, "left");
    check_end(a0_right, a_right, b_right, "right");
}

bool DampingProfile::b0_comparable() const
{
    const auto end_ok = [this](double a0, double b0) { return a0 == 0.0 || b0 >= c0 * a0; };
    return (a0_left > 0.0 || a0_right > 0.0) && end_ok(a0_left, b0_left) && end_ok(a0_right, b0_right);
}

GeneratorCoefficients GeneratorCoefficients::from(const DampingProfile& damping)
{
    return {damping.a_left, damping.a_right, damping.b_left, damping.b_right};
}

void GeneratorCoefficients::validate() const
{
    require_nonnegative(a_left, "a_left");
    require_nonnegative(a_right, "a_right");
    require_nonnegative(b_left, "b_left");
    require_nonnegative(b_right, "b_right");
}

CrossSection::CrossSection(int n_cells) : n_cells_(n_cells), h_(0.0)
{
    require(n_cells >= 8, fmt::format("cross section: n_cells must be at least 8, got {}", n_cells));
    h_ = 1.0 / n_cells;
    const Eigen::Index n = n_nodes();
    mass_ = RealVector::Constant(n, h_);
    mass_[0] = mass_[n - 1] = 0.5 * h_;
    k_diag_ = RealVector::Constant(n, 2.0 / h_);
    k_diag_[0] = k_diag_[n - 1] = 1.0 / h_;
    k_off_ = RealVector::Constant(n - 1, -1.0 / h_);
}

RealVector CrossSection::nodes() const
{
    return RealVector::LinSpaced(n_nodes(), 0.0, 1.0);
}

ComplexVector CrossSection::laplacian(const ComplexVector& u) const
{
    const Eigen::Index n = n_nodes();
    require(u.size() == n, "laplacian: vector length differs from node count");
    ComplexVector out(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        Complex ku = k_diag_[j] * u[j];
        if (j > 0) {
            ku += k_off_[j - 1] * u[j - 1];
        }
        if (j + 1 < n) {
            ku += k_off_[j] * u[j + 1];
        }
        out[j] = ku / mass_[j];
    }
    return out;
}

Complex CrossSection::gradient_form(const ComplexVector& u, const ComplexVector& v) const
{
    Complex sum{0.0, 0.0};
    for (Eigen::Index j = 0; j + 1 < n_nodes(); ++j) {
        sum += (u[j + 1] - u[j]) * std::conj(v[j + 1] - v[j]);
    }
    return sum / h_;
}

double CrossSection::gradient_energy(const ComplexVector& u) const
{
    return gradient_form(u, u).real();
}

Complex CrossSection::inner(const ComplexVector& u, const ComplexVector& v) const
{
    Complex sum{0.0, 0.0};
    for (Eigen::Index j = 0; j < n_nodes(); ++j) {
        sum += mass_[j] * u[j] * std::conj(v[j]);
    }
    return sum;
}

double CrossSection::l2_norm_sq(const ComplexVector& u) const { return inner(u, u).real(); }

CrossSection build_cross_section(int n_cells, const DampingProfile& damping)
{
    damping.validate();
    return CrossSection(n_cells);
}

namespace {

struct ImpedanceSystem {
    ComplexVector lower;
    ComplexVector diag;
    ComplexVector upper;
};

ImpedanceSystem assemble_impedance(const CrossSection& disc, const DampingProfile& damping, double lambda,
                                   double z, bool include_perturbation)
{
    const Eigen::Index n = disc.n_nodes();
    ImpedanceSystem s;
    s.diag = (disc.stiffness_diag() - z * disc.mass_weights()).cast<Complex>();
    s.lower = disc.stiffness_off().cast<Complex>();
    s.upper = s.lower;
    const double b_left = include_perturbation ? damping.b0_left : 0.0;
    const double b_right = include_perturbation ? damping.b0_right : 0.0;
    s.diag[0] += b_left - kI * damping.a0_left * lambda;
    s.diag[n - 1] += b_right - kI * damping.a0_right * lambda;
    return s;
}

void check_problem(const CrossSection& disc, const DampingProfile& damping, const ImpedanceProblem& p)
{
    require(std::isfinite(p.lambda) && std::isfinite(p.z), "impedance problem: lambda and z must be finite");
    require(p.z <= p.lambda * p.lambda * (1.0 + 1e-14) + 1e-300,
            fmt::format("impedance problem: z = {} exceeds lambda^2 = {}", p.z, p.lambda * p.lambda));
    require(p.f.size() == disc.n_nodes(), "impedance problem: f length differs from node count");
    require(damping.a0_left > 0.0 || p.g_left == Complex(0.0, 0.0),
            "impedance problem: nonzero boundary data at x=0 where a0 vanishes");
    require(damping.a0_right > 0.0 || p.g_right == Complex(0.0, 0.0),
            "impedance problem: nonzero boundary data at x=1 where a0 vanishes");
}

ComplexVector impedance_rhs(const CrossSection& disc, const ImpedanceProblem& p)
{
    ComplexVector rhs = disc.mass_weights().cast<Complex>().cwiseProduct(p.f);
    rhs[0] -= kI * p.g_left;
    rhs[rhs.size() - 1] -= kI * p.g_right;
    return rhs;
}

TridiagonalLU<Complex> factor(const ImpedanceSystem& s, double lambda, double z)
{
    try {
        return TridiagonalLU<Complex>(s.lower, s.diag, s.upper);
    } catch (const SingularSystem& e) {
        throw SingularSystem(fmt::format("impedance system singular at lambda={}, z={}: {}", lambda, z, e.what()));
    }
}

} // namespace

ComplexVector solve_impedance(const CrossSection& disc, const DampingProfile& damping, const ImpedanceProblem& problem)
{
    check_problem(disc, damping, problem);
    const auto system = assemble_impedance(disc, damping, problem.lambda, problem.z, problem.include_perturbation);
    const auto lu = factor(system, problem.lambda, problem.z);
    ComplexVector u = lu.solve(impedance_rhs(disc, problem));
    const double residual = impedance_residual(disc, damping, problem, u);
    if (!(residual <= 1e-10)) {
        throw SingularSystem(fmt::format("impedance solve at lambda={}, z={} left relative residual {}",
                                         problem.lambda, problem.z, residual));
    }
    return u;
}

double impedance_residual(const CrossSection& disc, const DampingProfile& damping, const ImpedanceProblem& problem,
                          const ComplexVector& u)
{
    const auto s = assemble_impedance(disc, damping, problem.lambda, problem.z, problem.include_perturbation);
    const ComplexVector rhs = impedance_rhs(disc, problem);
    const Eigen::Index n = disc.n_nodes();
    ComplexVector r(n);
    double scale = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        Complex su = s.diag[j] * u[j];
        double row = std::abs(s.diag[j]);
        if (j > 0) {
            su += s.lower[j - 1] * u[j - 1];
            row += std::abs(s.lower[j - 1]);
        }
        if (j + 1 < n) {
            su += s.upper[j] * u[j + 1];
            row += std::abs(s.upper[j]);
        }
        r[j] = su - rhs[j];
        scale = std::max(scale, row);
    }
    const double denom = scale * u.cwiseAbs().maxCoeff() + rhs.cwiseAbs().maxCoeff();
    return denom > 0.0 ? r.cwiseAbs().maxCoeff() / denom : 0.0;
}

RatioWeights RatioWeights::classical(double mu, double delta)
{
    const double b = bracket(mu);
    return {1.0, std::pow(b, -2.0), std::pow(b, 2.0 * delta), std::pow(b, -2.0 + delta)};
}

RatioWeights RatioWeights::overdamped(double lambda, double delta)
{
    const double b = bracket(lambda);
    return {1.0, 1.0, std::pow(b, 2.0 + 2.0 * delta), std::pow(b, delta)};
}

WorstCase worst_ratio(const CrossSection& disc, const DampingProfile& damping, double lambda, double z,
                      bool include_perturbation, const RatioWeights& weights)
{
    require(weights.target_l2 > 0.0 && weights.target_grad >= 0.0 && weights.source_f > 0.0 &&
                weights.source_g > 0.0,
            "worst_ratio: weights must be positive");
    require(z <= lambda * lambda * (1.0 + 1e-14) + 1e-300,
            fmt::format("worst_ratio: z = {} exceeds lambda^2 = {}", z, lambda * lambda));
    const Eigen::Index n = disc.n_nodes();
    const RealVector& w = disc.mass_weights();

    // Effective source norm on r = M f - i g (minimal-norm split of f and g at the endpoints).
    RealVector f_share(n);
    RealVector inv_sqrt_d(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double a0 = 0.0;
        if (j == 0) {
            a0 = damping.a0_left;
        } else if (j == n - 1) {
            a0 = damping.a0_right;
        }
        const double f_part = w[j] / weights.source_f;
        const double g_part = a0 / weights.source_g;
        f_share[j] = f_part / (f_part + g_part);
        inv_sqrt_d[j] = std::sqrt(f_part + g_part);
    }

    // Target form T = target_l2 M + target_grad K = L L^T.
    const TridiagonalCholesky target(weights.target_l2 * w + weights.target_grad * disc.stiffness_diag(),
                                     weights.target_grad * disc.stiffness_off());

    const auto system = assemble_impedance(disc, damping, lambda, z, include_perturbation);
    const auto lu = factor(system, lambda, z);

    Eigen::MatrixXcd g(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        ComplexVector e = ComplexVector::Zero(n);
        e[j] = inv_sqrt_d[j];
        g.col(j) = target.apply_upper(ComplexVector(lu.solve(e)));
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(g, Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw SolverFailure(fmt::format("worst_ratio: SVD failed at lambda={}, z={}", lambda, z));
    }
    const double sigma = svd.singularValues()(0);
    const ComplexVector y = svd.matrixV().col(0);
    double f_cost = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        f_cost += std::norm(y[j]) * f_share[j];
    }
    return {sigma * sigma, f_cost >= 0.5 * y.squaredNorm() ? 'f' : 'g'};
}

double impedance_resolvent_norm(const CrossSection& disc, const DampingProfile& damping, double mu, double delta,
                                const ImpedanceOptions& options)
{
    damping.validate();
    require(options.include_perturbation || std::abs(mu) >= options.mu0,
            fmt::format("impedance_resolvent_norm: |mu| = {} below mu0 = {}", std::abs(mu), options.mu0));
    return worst_ratio(disc, damping, mu, mu * mu, options.include_perturbation, RatioWeights::classical(mu, delta))
        .ratio;
}

namespace {

void summarize(SweepResult& result)
{
    result.parameters.clear();
    result.parameter_max.clear();
    for (const auto& row : result.rows) {
        if (result.parameters.empty() || result.parameters.back() != row.parameter) {
            result.parameters.push_back(row.parameter);
            result.parameter_max.push_back(row.worst_ratio);
        } else {
            result.parameter_max.back() = std::max(result.parameter_max.back(), row.worst_ratio);
        }
    }
    result.max_ratio = 0.0;
    for (const auto& row : result.rows) {
        if (row.worst_ratio > result.max_ratio) {
            result.max_ratio = row.worst_ratio;
            result.argmax_parameter = row.parameter;
        }
    }
    result.min_of_parameter_max = *std::min_element(result.parameter_max.begin(), result.parameter_max.end());
    std::vector<double> brackets;
    brackets.reserve(result.parameters.size());
    for (double p : result.parameters) {
        brackets.push_back(bracket(p));
    }
    result.fit = fit_power_law(brackets, result.parameter_max);
}

void check_resolution(const CrossSection& disc, const std::vector<double>& grid)
{
    double max_abs = 0.0;
    for (double p : grid) {
        require(std::isfinite(p), "sweep: grid values must be finite");
        max_abs = std::max(max_abs, std::abs(p));
    }
    require(disc.n_cells() >= 8.0 * max_abs,
            fmt::format("sweep: n_cells = {} is below 8 * max|frequency| = {}", disc.n_cells(), 8.0 * max_abs));
}

} // namespace

SweepResult sweep_impedance(const CrossSection& disc, const DampingProfile& damping, const std::vector<double>& mu_grid,
                            double delta, const ImpedanceOptions& options)
{
    damping.validate();
    require(!mu_grid.empty(), "sweep_impedance: empty grid");
    require(std::is_sorted(mu_grid.begin(), mu_grid.end()), "sweep_impedance: grid must be sorted");
    check_resolution(disc, mu_grid);
    for (double mu : mu_grid) {
        require(options.include_perturbation || std::abs(mu) >= options.mu0,
                fmt::format("sweep_impedance: |mu| = {} below mu0 = {}", std::abs(mu), options.mu0));
    }
    SweepResult result;
    result.rows.resize(mu_grid.size());
    parallel_for(mu_grid.size(), [&](std::size_t i) {
        const double mu = mu_grid[i];
        const auto wc = worst_ratio(disc, damping, mu, mu * mu, options.include_perturbation,
                                    RatioWeights::classical(mu, delta));
        result.rows[i] = {mu, mu * mu, wc.ratio, wc.kind};
    });
    summarize(result);
    return result;
}

std::vector<double> ZRule::values(double lambda) const
{
    std::vector<double> out;
    out.reserve(terms.size());
    for (const auto& t : terms) {
        out.push_back(t.offset + t.factor * lambda * lambda);
    }
    return out;
}

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

double parse_number(const std::string& token, const std::string& context)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) {
            throw std::invalid_argument(token);
        }
        return v;
    } catch (const std::exception&) {
        throw InvalidInput(fmt::format("z rule: cannot parse '{}' in '{}'", token, context));
    }
}

} // namespace

ZRule ZRule::parse(const std::string& text)
{
    ZRule rule;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string item = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        require(!item.empty(), fmt::format("z rule: empty entry in '{}'", text));
        Term term;
        // item := part ('+' part)*, part := number | l2 | number*l2
        std::size_t pos = 0;
        while (pos < item.size()) {
            std::size_t plus = item.find('+', pos + 1);
            // do not split inside an exponent such as 1e+3
            while (plus != std::string::npos && plus > 0 && (item[plus - 1] == 'e' || item[plus - 1] == 'E')) {
                plus = item.find('+', plus + 1);
            }
            const std::string part = trim(item.substr(pos, plus == std::string::npos ? std::string::npos : plus - pos));
            const auto star = part.find('*');
            if (part == "l2") {
                term.factor += 1.0;
            } else if (star != std::string::npos) {
                require(trim(part.substr(star + 1)) == "l2", fmt::format("z rule: unknown factor in '{}'", part));
                term.factor += parse_number(trim(part.substr(0, star)), text);
            } else {
                term.offset += parse_number(part, text);
            }
            if (plus == std::string::npos) {
                break;
            }
            pos = plus + 1;
        }
        require(term.factor <= 1.0, fmt::format("z rule: '{}' exceeds lambda^2 for large lambda", item));
        rule.terms.push_back(term);
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return rule;
}

SweepResult overdamped_sweep(const CrossSection& disc, const DampingProfile& damping,
                             const std::vector<double>& lambda_grid, const ZRule& z_rule, double delta,
                             const OverdampedOptions& options)
{
    damping.validate();
    require(!z_rule.terms.empty(), "overdamped_sweep: z rule has no terms");
    require(!lambda_grid.empty(), "overdamped_sweep: empty grid");
    require(std::is_sorted(lambda_grid.begin(), lambda_grid.end()), "overdamped_sweep: grid must be sorted");
    std::vector<double> grid = lambda_grid;
    const bool comparable = options.include_perturbation && damping.b0_comparable();
    if (comparable && std::find(grid.begin(), grid.end(), 0.0) == grid.end()) {
        grid.insert(std::upper_bound(grid.begin(), grid.end(), 0.0), 0.0);
    }
    check_resolution(disc, grid);
    for (double lambda : grid) {
        require(comparable || std::abs(lambda) >= options.lambda0,
                fmt::format("overdamped_sweep: |lambda| = {} below lambda0 = {} without b0 >= c0 a0",
                            std::abs(lambda), options.lambda0));
    }

    struct Pair {
        double lambda;
        double z;
    };
    std::vector<Pair> pairs;
    for (double lambda : grid) {
        std::set<double> seen;
        for (double z : z_rule.values(lambda)) {
            require(z <= lambda * lambda * (1.0 + 1e-14) + 1e-300,
                    fmt::format("overdamped_sweep: z = {} exceeds lambda^2 = {}", z, lambda * lambda));
            if (seen.insert(z).second) {
                pairs.push_back({lambda, z});
            }
        }
    }

    SweepResult result;
    result.rows.resize(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        const auto [lambda, z] = pairs[i];
        const RatioWeights weights =
            options.classical_weights ? RatioWeights::classical(lambda, delta) : RatioWeights::overdamped(lambda, delta);
        const auto wc = worst_ratio(disc, damping, lambda, z, options.include_perturbation, weights);
        result.rows[i] = {lambda, z, wc.ratio, wc.kind};
    });
    summarize(result);
    return result;
}

void write_sweep_csv(const std::string& path, const SweepResult& result)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), fmt::format("cannot open '{}' for writing", path));
    out << "mu,z,worst_ratio,argmax_kind\n";
    for (const auto& row : result.rows) {
        fmt::print(out, "{:.17g},{:.17g},{:.17g},{}\n", row.parameter, row.z, row.worst_ratio, row.kind);
    }
}

void write_sweep_summary(const std::string& path, const SweepResult& result)
{
    nlohmann::ordered_json j;
    if (result.fit) {
        j["slope"] = result.fit->slope;
        j["intercept"] = result.fit->intercept;
        j["r_squared"] = result.fit->r_squared;
    } else {
        j["slope"] = nullptr;
        j["intercept"] = nullptr;
        j["r_squared"] = nullptr;
    }
    j["max_ratio"] = result.max_ratio;
    j["argmax"] = result.argmax_parameter;
    j["spread"] = result.max_ratio / result.min_of_parameter_max;
    j["points"] = result.rows.size();
    std::ofstream out(path);
    require(static_cast<bool>(out), fmt::format("cannot open '{}' for writing", path));
    out << j.dump(2) << '\n';
}

} // namespace prodwave
