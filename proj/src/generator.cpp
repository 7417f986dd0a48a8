#include "prodwave/generator.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <fmt/format.h>
#include <fmt/ostream.h>

namespace prodwave {

namespace {

using SparseReal = Eigen::SparseMatrix<double>;
using SparseComplex = Eigen::SparseMatrix<Complex>;
using ComplexLU = Eigen::SparseLU<SparseComplex, Eigen::COLAMDOrdering<int>>;

constexpr double kNearSingular = 1e13;

} // namespace

ModeGenerator::ModeGenerator(const CrossSection& disc, const GeneratorCoefficients& coeffs, double eta_sq)
    : eta_sq_(eta_sq), h_(disc.h()), coeffs_(coeffs)
{
    coeffs_.validate();
    require(std::isfinite(eta_sq) && eta_sq >= 0.0, fmt::format("mode generator: eta^2 = {} must be >= 0", eta_sq));
    constrained_ = eta_sq == 0.0 && coeffs_.b_vanishes();
    mass_ = disc.mass_weights();
    const Eigen::Index n = mass_.size();
    q_diag_ = disc.stiffness_diag() + eta_sq * mass_;
    q_diag_[0] += coeffs_.b_left;
    q_diag_[n - 1] += coeffs_.b_right;
    q_off_ = disc.stiffness_off();

    const RealVector inv_sqrt_w = mass_.cwiseSqrt().cwiseInverse();
    std::vector<Eigen::Triplet<double>> c_entries;
    Eigen::Index rows = n;
    if (constrained_) {
        rows = n - 1;
        const double s = 1.0 / std::sqrt(h_);
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            c_entries.emplace_back(i, i, -s * inv_sqrt_w[i]);
            c_entries.emplace_back(i, i + 1, s * inv_sqrt_w[i + 1]);
        }
    } else {
        chol_.emplace(q_diag_, q_off_);
        for (Eigen::Index i = 0; i < n; ++i) {
            c_entries.emplace_back(i, i, chol_->diag()[i] * inv_sqrt_w[i]);
            if (i + 1 < n) {
                c_entries.emplace_back(i, i + 1, chol_->sub()[i] * inv_sqrt_w[i + 1]);
            }
        }
    }
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(2 * c_entries.size() + 2);
    for (const auto& t : c_entries) {
        entries.emplace_back(t.row(), rows + t.col(), t.value());
        entries.emplace_back(rows + t.col(), t.row(), -t.value());
    }
    if (coeffs_.a_left != 0.0) {
        entries.emplace_back(rows, rows, -coeffs_.a_left / mass_[0]);
    }
    if (coeffs_.a_right != 0.0) {
        entries.emplace_back(rows + n - 1, rows + n - 1, -coeffs_.a_right / mass_[n - 1]);
    }
    reduced_.resize(rows + n, rows + n);
    reduced_.setFromTriplets(entries.begin(), entries.end());
    reduced_.makeCompressed();
}

RealVector ModeGenerator::damping_diag() const
{
    RealVector d = RealVector::Zero(n_nodes());
    d[0] = coeffs_.a_left;
    d[n_nodes() - 1] = coeffs_.a_right;
    return d;
}

namespace {

template <class Vec>
Vec tridiag_apply(const RealVector& diag, const RealVector& off, const Vec& x)
{
    const Eigen::Index n = diag.size();
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = diag[i] * x[i];
        if (i > 0) {
            y[i] += off[i - 1] * x[i - 1];
        }
        if (i + 1 < n) {
            y[i] += off[i] * x[i + 1];
        }
    }
    return y;
}

} // namespace

ComplexVector ModeGenerator::apply(const ComplexVector& state) const
{
    const Eigen::Index n = n_nodes();
    require(state.size() == 2 * n, "mode generator: state length differs from 2 (N+1)");
    const ComplexVector u = state.head(n);
    const ComplexVector v = state.tail(n);
    ComplexVector out(2 * n);
    out.head(n) = v;
    ComplexVector force = tridiag_apply(q_diag_, q_off_, u);
    force[0] += coeffs_.a_left * v[0];
    force[n - 1] += coeffs_.a_right * v[n - 1];
    out.tail(n) = -force.cwiseQuotient(mass_.cast<Complex>());
    return out;
}

Complex ModeGenerator::gram_inner(const ComplexVector& a, const ComplexVector& b) const
{
    const Eigen::Index n = n_nodes();
    const ComplexVector qa = tridiag_apply(q_diag_, q_off_, ComplexVector(a.head(n)));
    Complex sum = b.head(n).dot(qa);
    for (Eigen::Index j = 0; j < n; ++j) {
        sum += mass_[j] * a[n + j] * std::conj(b[n + j]);
    }
    return sum;
}

double ModeGenerator::energy_norm_sq(const ComplexVector& state) const { return gram_inner(state, state).real(); }

double ModeGenerator::physical_energy(const ComplexVector& state) const
{
    const Eigen::Index n = n_nodes();
    double grad = 0.0;
    double mass_u = 0.0;
    double mass_v = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j + 1 < n) {
            grad += std::norm(state[j + 1] - state[j]) / h_;
        }
        mass_u += mass_[j] * std::norm(state[j]);
        mass_v += mass_[j] * std::norm(state[n + j]);
    }
    return 0.5 * (grad + eta_sq_ * mass_u + mass_v);
}

double ModeGenerator::boundary_dissipation(const ComplexVector& state) const
{
    const Eigen::Index n = n_nodes();
    return coeffs_.a_left * std::norm(state[n]) + coeffs_.a_right * std::norm(state[2 * n - 1]);
}

Complex ModeGenerator::constraint(const ComplexVector& state) const
{
    const Eigen::Index n = n_nodes();
    Complex sum = coeffs_.a_left * state[0] + coeffs_.a_right * state[n - 1];
    for (Eigen::Index j = 0; j < n; ++j) {
        sum += mass_[j] * state[n + j];
    }
    return sum;
}

SparseReal ModeGenerator::block() const
{
    const Eigen::Index n = n_nodes();
    std::vector<Eigen::Triplet<double>> entries;
    for (Eigen::Index j = 0; j < n; ++j) {
        entries.emplace_back(j, n + j, 1.0);
        entries.emplace_back(n + j, j, -q_diag_[j] / mass_[j]);
        if (j > 0) {
            entries.emplace_back(n + j, j - 1, -q_off_[j - 1] / mass_[j]);
        }
        if (j + 1 < n) {
            entries.emplace_back(n + j, j + 1, -q_off_[j] / mass_[j]);
        }
    }
    entries.emplace_back(n, n, -coeffs_.a_left / mass_[0]);
    entries.emplace_back(2 * n - 1, 2 * n - 1, -coeffs_.a_right / mass_[n - 1]);
    SparseReal a(2 * n, 2 * n);
    a.setFromTriplets(entries.begin(), entries.end());
    return a;
}

SparseReal ModeGenerator::gram() const
{
    const Eigen::Index n = n_nodes();
    std::vector<Eigen::Triplet<double>> entries;
    for (Eigen::Index j = 0; j < n; ++j) {
        entries.emplace_back(j, j, q_diag_[j]);
        if (j + 1 < n) {
            entries.emplace_back(j, j + 1, q_off_[j]);
            entries.emplace_back(j + 1, j, q_off_[j]);
        }
        entries.emplace_back(n + j, n + j, mass_[j]);
    }
    SparseReal g(2 * n, 2 * n);
    g.setFromTriplets(entries.begin(), entries.end());
    return g;
}

ComplexVector ModeGenerator::to_reduced(const ComplexVector& state) const
{
    const Eigen::Index n = n_nodes();
    require(state.size() == 2 * n, "mode generator: state length differs from 2 (N+1)");
    const Eigen::Index rows = reduced_size() - n;
    ComplexVector x(reduced_size());
    if (constrained_) {
        const double s = 1.0 / std::sqrt(h_);
        for (Eigen::Index i = 0; i < rows; ++i) {
            x[i] = s * (state[i + 1] - state[i]);
        }
    } else {
        x.head(n) = chol_->apply_upper(ComplexVector(state.head(n)));
    }
    x.tail(n) = state.tail(n).cwiseProduct(mass_.cwiseSqrt().cast<Complex>());
    return x;
}

ComplexVector ModeGenerator::from_reduced(const ComplexVector& x) const
{
    const Eigen::Index n = n_nodes();
    require(x.size() == reduced_size(), "mode generator: reduced vector has the wrong length");
    const Eigen::Index rows = reduced_size() - n;
    ComplexVector state(2 * n);
    state.tail(n) = x.tail(n).cwiseQuotient(mass_.cwiseSqrt().cast<Complex>());
    if (constrained_) {
        const double s = std::sqrt(h_);
        ComplexVector p(n);
        p[0] = 0.0;
        for (Eigen::Index i = 0; i < rows; ++i) {
            p[i + 1] = p[i] + s * x[i];
        }
        Complex u0{0.0, 0.0};
        const double a_sum = constraint_of_constant();
        if (a_sum > 0.0) {
            Complex mv{0.0, 0.0};
            for (Eigen::Index j = 0; j < n; ++j) {
                mv += mass_[j] * state[n + j];
            }
            u0 = -(mv + coeffs_.a_right * p[n - 1]) / a_sum;
        } else {
            u0 = -mass_.cast<Complex>().dot(p);
        }
        state.head(n) = p.array() + u0;
    } else {
        const RealVector& d = chol_->diag();
        const RealVector& l = chol_->sub();
        state[n - 1] = x[n - 1] / d[n - 1];
        for (Eigen::Index i = n - 2; i >= 0; --i) {
            state[i] = (x[i] - l[i] * state[i + 1]) / d[i];
        }
    }
    return state;
}

ModeGenerator assemble_mode_generator(const CrossSection& disc, const DampingProfile& damping, double eta_sq)
{
    damping.validate();
    return ModeGenerator(disc, GeneratorCoefficients::from(damping), eta_sq);
}

ModeSpectrum mode_spectrum(const ModeGenerator& gen)
{
    const Eigen::MatrixXd dense(gen.reduced());
    Eigen::EigenSolver<Eigen::MatrixXd> solver(dense, false);
    if (solver.info() != Eigen::Success) {
        throw SolverFailure(fmt::format("mode_spectrum: eigen-solver failed for eta^2 = {}", gen.eta_sq()));
    }
    ModeSpectrum out;
    const Eigen::VectorXcd values = solver.eigenvalues();
    out.eigenvalues.assign(values.data(), values.data() + values.size());
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](Complex a, Complex b) {
        return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() < b.real();
    });
    out.abscissa = -std::numeric_limits<double>::infinity();
    for (const auto& z : out.eigenvalues) {
        out.abscissa = std::max(out.abscissa, z.real());
    }
    return out;
}

namespace {

SparseComplex shifted(const ModeGenerator& gen, Complex shift)
{
    SparseComplex m = gen.reduced().cast<Complex>();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m.coeffRef(i, i) += shift;
    }
    m.makeCompressed();
    return m;
}

bool factorize(ComplexLU& lu, const SparseComplex& m)
{
    lu.analyzePattern(m);
    lu.factorize(m);
    return lu.info() == Eigen::Success;
}

} // namespace

double mode_resolvent_norm(const ModeGenerator& gen, double lambda)
{
    require(std::isfinite(lambda), "mode_resolvent_norm: lambda must be finite");
    ComplexLU lu;
    if (!factorize(lu, shifted(gen, Complex(0.0, lambda)))) {
        throw NearSingular(fmt::format("A + i lambda is singular at lambda = {}, eta^2 = {}", lambda, gen.eta_sq()));
    }
    const auto top = largest_singular_value([&](const ComplexVector& x) -> ComplexVector { return lu.solve(x); },
                                            [&](const ComplexVector& x) -> ComplexVector {
                                                return lu.adjoint().solve(x);
                                            },
                                            gen.reduced_size(), 1e-11);
    if (!(top.value <= kNearSingular)) {
        throw NearSingular(fmt::format("A + i lambda has smallest singular value {:.3e} at lambda = {}, eta^2 = {}",
                                       1.0 / top.value, lambda, gen.eta_sq()));
    }
    return top.value;
}

Complex nearest_eigenvalue(const ModeGenerator& gen, Complex guess, int max_iterations)
{
    const Eigen::Index n = gen.reduced_size();
    const SparseComplex a = gen.reduced().cast<Complex>();
    std::mt19937_64 rng(0x1d3a5eedULL);
    std::normal_distribution<double> normal;
    ComplexVector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = Complex(normal(rng), normal(rng));
    }
    x.normalize();
    Complex shift = guess;
    ComplexLU lu;
    if (!factorize(lu, shifted(gen, -shift))) {
        return shift;
    }
    for (int it = 0; it < max_iterations; ++it) {
        ComplexVector y = lu.solve(x);
        x = y / y.norm();
        const ComplexVector ax = a * x;
        const Complex theta = x.dot(ax);
        const double residual = (ax - theta * x).norm();
        if (residual <= 1e-11 * std::max(1.0, std::abs(theta))) {
            return theta;
        }
        // switch to Rayleigh-quotient shifts once the iterate has settled
        if (it >= 2) {
            shift = theta;
            if (!factorize(lu, shifted(gen, -shift))) {
                return shift;
            }
        }
    }
    throw SolverFailure(fmt::format("nearest_eigenvalue: no convergence near {}{:+}i for eta^2 = {}", guess.real(),
                                    guess.imag(), gen.eta_sq()));
}

ModeFamily::ModeFamily(TransverseModel model, CrossSection disc, DampingProfile damping)
    : model_(std::move(model)), disc_(std::move(disc)), damping_(damping)
{
    model_.validate();
    damping_.validate();
}

const ModeGenerator& ModeFamily::mode(double eta)
{
    std::lock_guard lock(mutex_);
    auto it = cache_.find(eta);
    if (it == cache_.end()) {
        it = cache_.emplace(eta, ModeGenerator(disc_, GeneratorCoefficients::from(damping_), eta * eta)).first;
    }
    return it->second;
}

ProductNorm product_resolvent_norm(ModeFamily& family, double lambda)
{
    double margin = 5.0 + 0.1 * std::abs(lambda);
    for (int widening = 0;; ++widening) {
        const double cut = std::abs(lambda) + margin;
        auto modes = transverse_eigenvalues(family.model(), cut);
        if (modes.empty()) {
            const auto all = transverse_eigenvalues(family.model(), std::max(2.0 * cut, 1.0));
            require(!all.empty(), "product_resolvent_norm: transverse model has no spectrum");
            modes.push_back(all.front());
        }
        std::vector<const ModeGenerator*> gens;
        gens.reserve(modes.size());
        for (const auto& m : modes) {
            gens.push_back(&family.mode(m.eta));
        }
        std::vector<double> norms(modes.size());
        parallel_for(modes.size(), [&](std::size_t i) { norms[i] = mode_resolvent_norm(*gens[i], lambda); });
        const auto best = static_cast<std::size_t>(std::max_element(norms.begin(), norms.end()) - norms.begin());
        const bool on_boundary =
            best + 1 == modes.size() && transverse_eigenvalues(family.model(), 2.0 * cut).size() > modes.size();
        if (!on_boundary) {
            return {norms[best], modes[best].eta, margin, modes.size()};
        }
        if (widening == 3) {
            throw MarginExhausted(fmt::format(
                "product_resolvent_norm: maximizer eta = {} stays on the search boundary at lambda = {} (margin {})",
                modes[best].eta, lambda, margin));
        }
        margin *= 2.0;
    }
}

ProductNorm product_resolvent_norm(const TransverseModel& model, const CrossSection& disc,
                                   const DampingProfile& damping, double lambda)
{
    ModeFamily family(model, disc, damping);
    return product_resolvent_norm(family, lambda);
}

namespace {

double golden_maximum(const std::function<double(double)>& f, double lo, double hi, double f_mid_guess, int iterations,
                      double& argmax)
{
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < iterations; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    argmax = fc > fd ? c : d;
    const double best = std::max(fc, fd);
    if (f_mid_guess > best) {
        argmax = 0.5 * (lo + hi);
        return f_mid_guess;
    }
    return best;
}

} // namespace

ResolventSweep resolvent_sweep(const TransverseModel& model, const CrossSection& disc, const DampingProfile& damping,
                               const std::vector<double>& lambda_grid, const ResolventSweepOptions& options)
{
    require(!lambda_grid.empty(), "resolvent_sweep: empty grid");
    require(std::is_sorted(lambda_grid.begin(), lambda_grid.end()), "resolvent_sweep: grid must be sorted");
    double max_abs = 0.0;
    for (double l : lambda_grid) {
        require(std::isfinite(l), "resolvent_sweep: grid values must be finite");
        max_abs = std::max(max_abs, std::abs(l));
    }
    require(disc.n_cells() >= 8.0 * max_abs,
            fmt::format("resolvent_sweep: n_cells = {} is below 8 * max|lambda| = {}", disc.n_cells(), 8.0 * max_abs));
    ModeFamily family(model, disc, damping);

    ResolventSweep out;
    out.rows.reserve(lambda_grid.size());
    for (double lambda : lambda_grid) {
        const auto p = product_resolvent_norm(family, lambda);
        out.rows.push_back({lambda, p.norm, p.argmax_eta, 0.0});
    }

    const double lo = lambda_grid.front();
    const double hi = lambda_grid.back();
    if (options.resolve_peaks && lo >= 0.0) {
        struct Job {
            double eta;
            double guess;
        };
        std::vector<Job> jobs;
        for (const auto& m : transverse_eigenvalues(model, hi)) {
            for (int n = 1; n <= options.peak_orders; ++n) {
                for (double xi : {n * M_PI, (n + 0.5) * M_PI}) {
                    const double s = std::hypot(m.eta, xi);
                    if (s <= hi + 1.0) {
                        jobs.push_back({m.eta, s});
                    }
                }
            }
        }
        std::vector<std::optional<ResolventPeak>> found(jobs.size());
        parallel_for(jobs.size(), [&](std::size_t i) {
            const ModeGenerator& gen = family.mode(jobs[i].eta);
            const Complex z = nearest_eigenvalue(gen, Complex(0.0, -jobs[i].guess));
            const double s0 = -z.imag();
            if (s0 < lo || s0 > hi || z.real() >= 0.0) {
                return;
            }
            const double width = 2.0 * std::abs(z.real());
            const auto f = [&](double s) { return mode_resolvent_norm(gen, s); };
            double arg = s0;
            const double value =
                golden_maximum(f, std::max(lo, s0 - width), std::min(hi, s0 + width), f(s0), 10, arg);
            found[i] = ResolventPeak{jobs[i].eta, z, arg, value};
        });
        for (const auto& p : found) {
            if (!p) {
                continue;
            }
            const bool duplicate = std::any_of(out.peaks.begin(), out.peaks.end(), [&](const ResolventPeak& q) {
                return q.eta == p->eta && std::abs(q.eigenvalue - p->eigenvalue) <= 1e-8 * std::abs(p->eigenvalue);
            });
            if (!duplicate) {
                out.peaks.push_back(*p);
            }
        }
        std::sort(out.peaks.begin(), out.peaks.end(),
                  [](const ResolventPeak& a, const ResolventPeak& b) { return a.frequency < b.frequency; });
    }

    double running = 0.0;
    std::size_t next_peak = 0;
    for (auto& row : out.rows) {
        while (next_peak < out.peaks.size() && out.peaks[next_peak].frequency <= row.lambda) {
            running = std::max(running, out.peaks[next_peak].norm);
            ++next_peak;
        }
        running = std::max(running, row.product_norm);
        row.envelope = running;
    }

    std::vector<double> lambdas;
    std::vector<double> pointwise;
    std::vector<double> envelope;
    for (const auto& row : out.rows) {
        if (row.lambda > 0.0) {
            lambdas.push_back(row.lambda);
            pointwise.push_back(row.product_norm);
            envelope.push_back(row.envelope);
        }
    }
    out.pointwise_fit = fit_power_law(lambdas, pointwise);
    out.envelope_fit = fit_power_law(lambdas, envelope);
    return out;
}

PowerLawFit fit_resolvent_exponent(const std::vector<double>& lambdas, const std::vector<double>& norms)
{
    require(lambdas.size() >= 10, "fit_resolvent_exponent: at least 10 grid points are required");
    for (double l : lambdas) {
        require(l >= 5.0, fmt::format("fit_resolvent_exponent: lambda = {} is below 5", l));
    }
    const auto fit = fit_power_law(lambdas, norms);
    require(fit.has_value(), "fit_resolvent_exponent: degenerate grid");
    return *fit;
}

void write_resolvent_csv(const std::string& path, const ResolventSweep& sweep)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), fmt::format("cannot open '{}' for writing", path));
    out << "lambda,product_norm,argmax_eta,envelope\n";
    for (const auto& r : sweep.rows) {
        fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g}\n", r.lambda, r.product_norm, r.argmax_eta, r.envelope);
    }
}

void write_abscissa_csv(const std::string& path, const std::vector<double>& etas,
                        const std::vector<ModeSpectrum>& spectra)
{
    require(etas.size() == spectra.size(), "write_abscissa_csv: size mismatch");
    std::ofstream out(path);
    require(static_cast<bool>(out), fmt::format("cannot open '{}' for writing", path));
    out << "eta,abscissa,n_eigenvalues\n";
    for (std::size_t i = 0; i < etas.size(); ++i) {
        fmt::print(out, "{:.17g},{:.17g},{}\n", etas[i], spectra[i].abscissa, spectra[i].eigenvalues.size());
    }
}

void write_eigenvalues_csv(const std::string& path, const ModeSpectrum& spectrum)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), fmt::format("cannot open '{}' for writing", path));
    out << "re,im\n";
    for (const auto& z : spectrum.eigenvalues) {
        fmt::print(out, "{:.17g},{:.17g}\n", z.real(), z.imag());
    }
}

} // namespace prodwave
