#include "prodwave/transverse.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace prodwave {

TransverseModel TransverseModel::circle(double length)
{
    TransverseModel m;
    m.kind = TransverseKind::circle;
    m.lengths = {length};
    return m;
}

TransverseModel TransverseModel::torus(std::vector<double> lengths)
{
    TransverseModel m;
    m.kind = TransverseKind::torus;
    m.lengths = std::move(lengths);
    return m;
}

TransverseModel TransverseModel::interval(double length, bool dirichlet)
{
    TransverseModel m;
    m.kind = dirichlet ? TransverseKind::interval_dirichlet : TransverseKind::interval_neumann;
    m.lengths = {length};
    return m;
}

TransverseModel TransverseModel::explicit_values(std::vector<double> eta)
{
    TransverseModel m;
    m.kind = TransverseKind::explicit_list;
    m.lengths.clear();
    m.explicit_eta = std::move(eta);
    return m;
}

void TransverseModel::validate() const
{
    if (kind == TransverseKind::explicit_list) {
        for (double e : explicit_eta) {
            require(std::isfinite(e) && e >= 0.0, fmt::format("transverse: explicit eta {} is negative", e));
        }
        return;
    }
    require(!lengths.empty(), "transverse: no lengths given");
    require(kind == TransverseKind::torus || lengths.size() == 1, "transverse: circle and interval take one length");
    for (double l : lengths) {
        require(std::isfinite(l) && l > 0.0, fmt::format("transverse: length {} must be positive", l));
    }
}

std::string TransverseModel::describe() const
{
    switch (kind) {
    case TransverseKind::circle:
        return fmt::format("circle({})", lengths[0]);
    case TransverseKind::torus:
        return fmt::format("torus({})", fmt::join(lengths, ","));
    case TransverseKind::interval_dirichlet:
        return fmt::format("interval_dirichlet({})", lengths[0]);
    case TransverseKind::interval_neumann:
        return fmt::format("interval_neumann({})", lengths[0]);
    case TransverseKind::explicit_list:
        return fmt::format("explicit({} values)", explicit_eta.size());
    }
    return "unknown";
}

namespace {

// Merge sorted eta^2 values that agree to rounding.
std::vector<SpectralValue> group_squares(std::vector<double> squares)
{
    std::sort(squares.begin(), squares.end());
    std::vector<SpectralValue> out;
    double last = -1.0;
    for (double s : squares) {
        if (!out.empty() && std::abs(s - last) <= 1e-12 * std::max(1.0, s)) {
            ++out.back().multiplicity;
        } else {
            out.push_back({std::sqrt(s), 1});
            last = s;
        }
    }
    return out;
}

void torus_points(const std::vector<double>& lengths, std::size_t dim, double partial, double limit_sq,
                  std::vector<double>& out)
{
    if (dim == lengths.size()) {
        out.push_back(partial);
        return;
    }
    const double step = 2.0 * M_PI / lengths[dim];
    const auto m_max = static_cast<long>(std::floor(std::sqrt(std::max(limit_sq - partial, 0.0)) / step));
    for (long m = -m_max; m <= m_max; ++m) {
        const double next = partial + (step * m) * (step * m);
        if (next <= limit_sq * (1.0 + 1e-14)) {
            torus_points(lengths, dim + 1, next, limit_sq, out);
        }
    }
}

} // namespace

std::vector<SpectralValue> transverse_eigenvalues(const TransverseModel& model, double eta_max)
{
    model.validate();
    require(std::isfinite(eta_max) && eta_max > 0.0, "transverse_eigenvalues: eta_max must be positive");
    const double cap = eta_max * (1.0 + 1e-14);
    std::vector<SpectralValue> out;
    switch (model.kind) {
    case TransverseKind::circle: {
        const double step = 2.0 * M_PI / model.lengths[0];
        for (long k = 0; step * k <= cap; ++k) {
            out.push_back({step * k, k == 0 ? 1 : 2});
        }
        break;
    }
    case TransverseKind::interval_dirichlet:
    case TransverseKind::interval_neumann: {
        const double step = M_PI / model.lengths[0];
        const long first = model.kind == TransverseKind::interval_dirichlet ? 1 : 0;
        for (long k = first; step * k <= cap; ++k) {
            out.push_back({step * k, 1});
        }
        break;
    }
    case TransverseKind::torus: {
        std::vector<double> squares;
        torus_points(model.lengths, 0, 0.0, eta_max * eta_max, squares);
        out = group_squares(std::move(squares));
        break;
    }
    case TransverseKind::explicit_list: {
        std::vector<double> eta = model.explicit_eta;
        std::sort(eta.begin(), eta.end());
        for (double e : eta) {
            if (e > cap) {
                break;
            }
            if (!out.empty() && out.back().eta == e) {
                ++out.back().multiplicity;
            } else {
                out.push_back({e, 1});
            }
        }
        break;
    }
    }
    return out;
}

std::vector<SpectralValue> first_spectral_values(const TransverseModel& model, std::size_t count)
{
    model.validate();
    double eta_max = 16.0;
    if (model.kind == TransverseKind::explicit_list) {
        eta_max = model.explicit_eta.empty()
                      ? 1.0
                      : std::max(1.0, *std::max_element(model.explicit_eta.begin(), model.explicit_eta.end()));
    }
    for (int attempt = 0; attempt < 40; ++attempt) {
        auto spectrum = transverse_eigenvalues(model, eta_max);
        if (spectrum.size() >= count) {
            spectrum.resize(count);
            return spectrum;
        }
        if (model.kind == TransverseKind::explicit_list) {
            break;
        }
        eta_max *= 2.0;
    }
    throw InvalidInput(fmt::format("transverse model {} has fewer than {} spectral values", model.describe(), count));
}

std::vector<double> read_explicit_spectrum(const std::string& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), fmt::format("cannot open spectrum file '{}'", path));
    std::vector<double> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) {
            continue;
        }
        const auto e = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(b, e - b + 1);
        double value = 0.0;
        try {
            std::size_t used = 0;
            value = std::stod(token, &used);
            if (used != token.size()) {
                throw std::invalid_argument(token);
            }
        } catch (const std::exception&) {
            throw InvalidInput(fmt::format("{}:{}: cannot parse '{}' as a number", path, line_no, token));
        }
        require(value >= 0.0, fmt::format("{}:{}: eta {} is negative", path, line_no, value));
        out.push_back(value);
    }
    return out;
}

void write_spectrum_csv(const std::string& path, const std::vector<SpectralValue>& spectrum)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), fmt::format("cannot open '{}' for writing", path));
    out << "eta,multiplicity\n";
    for (const auto& s : spectrum) {
        fmt::print(out, "{:.17g},{}\n", s.eta, s.multiplicity);
    }
}

double window_half_width(double center, double lambda, double delta, double epsilon)
{
    return epsilon / (bracket(center) * std::pow(bracket(lambda), 1.0 + delta));
}

SpectralWindow SpectralWindow::make(double center, double lambda, double delta, double epsilon)
{
    return {center, window_half_width(center, lambda, delta, epsilon), lambda, delta, epsilon};
}

std::vector<SpectralWindow> window_cover(double lambda, double delta, double epsilon, double eta_max)
{
    require(epsilon > 0.0 && epsilon < 1.0, fmt::format("window_cover: epsilon = {} must lie in (0, 1)", epsilon));
    require(std::isfinite(lambda), "window_cover: lambda must be finite");
    require(delta >= 0.0, "window_cover: delta must be nonnegative");
    require(std::isfinite(eta_max) && eta_max > 0.0, "window_cover: eta_max must be positive");
    std::vector<SpectralWindow> cover{SpectralWindow::make(0.0, lambda, delta, epsilon)};
    while (cover.back().center + cover.back().half_width < eta_max) {
        const auto& prev = cover.back();
        const double left = prev.center + 0.5 * prev.half_width;
        // solve c - hw(c) = left; hw varies slowly so the iteration contracts fast
        double c = left + prev.half_width;
        for (int it = 0; it < 100; ++it) {
            const double next = left + window_half_width(c, lambda, delta, epsilon);
            if (std::abs(next - c) <= 1e-15 * std::max(1.0, c)) {
                c = next;
                break;
            }
            c = next;
        }
        cover.push_back(SpectralWindow::make(c, lambda, delta, epsilon));
    }
    return cover;
}

int cover_multiplicity(const std::vector<SpectralWindow>& cover, double eta)
{
    // windows shrink with the center, so every hit lies near the first center above eta
    auto it = std::lower_bound(cover.begin(), cover.end(), eta,
                               [](const SpectralWindow& w, double x) { return w.center < x; });
    int count = 0;
    for (auto fwd = it; fwd != cover.end() && fwd->center - fwd->half_width <= eta; ++fwd) {
        count += fwd->contains(eta) ? 1 : 0;
    }
    for (auto back = it; back != cover.begin();) {
        --back;
        if (back->center + cover.front().half_width < eta) {
            break;
        }
        count += back->contains(eta) ? 1 : 0;
    }
    return count;
}

std::vector<SpectralValue> project_window(const std::vector<SpectralValue>& spectrum, const SpectralWindow& window)
{
    std::vector<SpectralValue> out;
    for (const auto& s : spectrum) {
        if (window.contains(s.eta)) {
            out.push_back(s);
        }
    }
    return out;
}

} // namespace prodwave
