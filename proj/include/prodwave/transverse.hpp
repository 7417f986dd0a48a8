#pragma once

#include <string>
#include <vector>

#include "prodwave/common.hpp"

namespace prodwave {

enum class TransverseKind { circle, torus, interval_dirichlet, interval_neumann, explicit_list };

/// Spectral description of the compact factor Y through the eigenvalues eta^2 of Delta_y.
struct TransverseModel {
    TransverseKind kind = TransverseKind::circle;
    std::vector<double> lengths{2.0 * M_PI};
    std::vector<double> explicit_eta;

    static TransverseModel circle(double length);
    static TransverseModel torus(std::vector<double> lengths);
    static TransverseModel interval(double length, bool dirichlet);
    static TransverseModel explicit_values(std::vector<double> eta);

    void validate() const;
    [[nodiscard]] std::string describe() const;
};

struct SpectralValue {
    double eta = 0.0;
    int multiplicity = 1;

    bool operator==(const SpectralValue&) const = default;
};

/// Sorted spectral values eta <= eta_max with multiplicities. Equal values of
/// an explicit list are merged into one entry.
std::vector<SpectralValue> transverse_eigenvalues(const TransverseModel& model, double eta_max);

/// The `count` smallest distinct spectral values. Throws InvalidInput when an
/// explicit list is shorter.
std::vector<SpectralValue> first_spectral_values(const TransverseModel& model, std::size_t count);

/// Reads an explicit spectrum, one eta per line; blank lines and '#' comments are skipped.
std::vector<double> read_explicit_spectrum(const std::string& path);

/// CSV with columns eta,multiplicity.
void write_spectrum_csv(const std::string& path, const std::vector<SpectralValue>& spectrum);

/// eps / (<eta> <lambda>^{1+delta}).
double window_half_width(double center, double lambda, double delta, double epsilon);

struct SpectralWindow {
    double center = 0.0;
    double half_width = 0.0;
    double lambda = 0.0;
    double delta = 0.0;
    double epsilon = 0.0;

    static SpectralWindow make(double center, double lambda, double delta, double epsilon);
    [[nodiscard]] bool contains(double eta) const { return std::abs(eta - center) <= half_width; }
};

/// Greedy left-to-right cover of [0, eta_max]. The first window is centred at 0;
/// each next window starts half a half-width before the previous one ends.
std::vector<SpectralWindow> window_cover(double lambda, double delta, double epsilon, double eta_max);

/// Number of windows of a cover (sorted by center) containing eta.
int cover_multiplicity(const std::vector<SpectralWindow>& cover, double eta);

/// Spectral values inside the window.
std::vector<SpectralValue> project_window(const std::vector<SpectralValue>& spectrum, const SpectralWindow& window);

} // namespace prodwave
