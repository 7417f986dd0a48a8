#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prodwave/transverse.hpp"

using namespace prodwave;

TEST(TransverseSpectrum, CircleOfLengthTwoPi)
{
    const auto s = transverse_eigenvalues(TransverseModel::circle(2.0 * M_PI), 3.5);
    const std::vector<SpectralValue> want = {{0.0, 1}, {1.0, 2}, {2.0, 2}, {3.0, 2}};
    ASSERT_EQ(s.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        EXPECT_NEAR(s[i].eta, want[i].eta, 1e-14);
        EXPECT_EQ(s[i].multiplicity, want[i].multiplicity);
    }
}

TEST(TransverseSpectrum, DirichletAndNeumannIntervals)
{
    const auto d = transverse_eigenvalues(TransverseModel::interval(1.0, true), 10.0);
    ASSERT_EQ(d.size(), 3U);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_NEAR(d[i].eta, M_PI * static_cast<double>(i + 1), 1e-13);
        EXPECT_EQ(d[i].multiplicity, 1);
    }
    const auto n = transverse_eigenvalues(TransverseModel::interval(1.0, false), 10.0);
    ASSERT_EQ(n.size(), 4U);
    EXPECT_EQ(n.front().eta, 0.0);
}

TEST(TransverseSpectrum, SquareTorusSmallValues)
{
    const auto s = transverse_eigenvalues(TransverseModel::torus({2.0 * M_PI, 2.0 * M_PI}), 1.5);
    ASSERT_EQ(s.size(), 3U);
    EXPECT_EQ(s[0], (SpectralValue{0.0, 1}));
    EXPECT_NEAR(s[1].eta, 1.0, 1e-14);
    EXPECT_EQ(s[1].multiplicity, 4);
    EXPECT_NEAR(s[2].eta, std::sqrt(2.0), 1e-14);
    EXPECT_EQ(s[2].multiplicity, 4);
}

TEST(TransverseSpectrum, TorusMatchesLatticeScan)
{
    for (const std::vector<double>& lengths :
         {std::vector<double>{2.0 * M_PI, 3.0}, std::vector<double>{1.0, 2.0, 2.5}, std::vector<double>{4.0}}) {
        const double eta_max = 14.0;
        const auto s = transverse_eigenvalues(TransverseModel::torus(lengths), eta_max);
        const auto squares = oracle::torus_squares(lengths, eta_max);
        int total = 0;
        for (const auto& v : s) {
            total += v.multiplicity;
            const auto count = std::count_if(squares.begin(), squares.end(), [&](double q) {
                return std::abs(q - v.eta * v.eta) <= 1e-9 * std::max(1.0, q);
            });
            EXPECT_EQ(count, v.multiplicity) << "eta=" << v.eta;
        }
        EXPECT_EQ(total, static_cast<int>(squares.size()));
        EXPECT_TRUE(std::is_sorted(s.begin(), s.end(), [](auto a, auto b) { return a.eta < b.eta; }));
    }
}

TEST(TransverseSpectrum, ExplicitListIsFilteredAndMerged)
{
    const auto s = transverse_eigenvalues(TransverseModel::explicit_values({3.0, 1.0, 1.0, 7.5, 0.0}), 5.0);
    const std::vector<SpectralValue> want = {{0.0, 1}, {1.0, 2}, {3.0, 1}};
    EXPECT_EQ(s, want);
    EXPECT_THROW(transverse_eigenvalues(TransverseModel::explicit_values({1.0, -2.0}), 5.0), InvalidInput);
    EXPECT_THROW(transverse_eigenvalues(TransverseModel::circle(1.0), 0.0), InvalidInput);
    EXPECT_THROW(TransverseModel::circle(-1.0).validate(), InvalidInput);
}

TEST(TransverseSpectrum, ExplicitListFromFile)
{
    const auto path = std::filesystem::temp_directory_path() / "prodwave_spectrum.txt";
    {
        std::ofstream out(path);
        out << "# eta values\n0\n\n2.5  # second\n1e1\n";
    }
    EXPECT_EQ(read_explicit_spectrum(path.string()), (std::vector<double>{0.0, 2.5, 10.0}));
    {
        std::ofstream out(path);
        out << "1\nabc\n";
    }
    try {
        (void)read_explicit_spectrum(path.string());
        FAIL() << "expected InvalidInput";
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
    }
    EXPECT_THROW(read_explicit_spectrum("/nonexistent/spectrum.txt"), InvalidInput);
}

TEST(TransverseSpectrum, FirstValues)
{
    const auto s = first_spectral_values(TransverseModel::circle(2.0 * M_PI), 40);
    ASSERT_EQ(s.size(), 40U);
    EXPECT_NEAR(s.back().eta, 39.0, 1e-12);
    EXPECT_THROW(first_spectral_values(TransverseModel::explicit_values({1.0, 2.0}), 3), InvalidInput);
}

TEST(Window, HalfWidthFormula)
{
    const double eps = 0.3;
    const SpectralWindow w = SpectralWindow::make(10.0, 10.0, 1.0, eps);
    // <10> <10>^2 = 101^{3/2} = 1015.037...
    EXPECT_NEAR(eps / w.half_width, 101.0 * std::sqrt(101.0), 1e-9);
    EXPECT_NEAR(eps / w.half_width, 1015.0374, 1e-4);
    for (const auto& win : window_cover(7.0, 2.0, 0.4, 30.0)) {
        EXPECT_DOUBLE_EQ(win.half_width, 0.4 / (bracket(win.center) * std::pow(bracket(7.0), 3.0)));
    }
}

TEST(Window, CoverOfSmallInterval)
{
    const auto cover = window_cover(0.0, 0.0, 0.5, 2.0);
    ASSERT_FALSE(cover.empty());
    EXPECT_EQ(cover.front().center, 0.0);
    for (int i = 0; i <= 10000; ++i) {
        const double eta = 2.0 * i / 10000.0;
        int brute = 0;
        for (const auto& w : cover) {
            brute += w.contains(eta) ? 1 : 0;
        }
        EXPECT_GE(brute, 1) << eta;
        EXPECT_LE(brute, 3) << eta;
        EXPECT_EQ(cover_multiplicity(cover, eta), brute) << eta;
    }
}

TEST(Window, RejectsBadEpsilon)
{
    EXPECT_THROW(window_cover(1.0, 0.0, 1.0, 2.0), InvalidInput);
    EXPECT_THROW(window_cover(1.0, 0.0, 0.0, 2.0), InvalidInput);
    EXPECT_THROW(window_cover(1.0, -1.0, 0.5, 2.0), InvalidInput);
}

TEST(Window, ProjectionExamples)
{
    const auto circle = transverse_eigenvalues(TransverseModel::circle(2.0 * M_PI), 10.0);
    SpectralWindow w;
    w.center = 2.0;
    w.half_width = 0.5;
    const auto p = project_window(circle, w);
    ASSERT_EQ(p.size(), 1U);
    EXPECT_NEAR(p[0].eta, 2.0, 1e-14);
    EXPECT_EQ(p[0].multiplicity, 2);
    EXPECT_EQ(project_window(p, w), p);
    w.center = 2.5;
    w.half_width = 0.1;
    EXPECT_TRUE(project_window(circle, w).empty());
}

TEST(Window, RandomWindowsSatisfyTheSquareBound)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lam(0.0, 100.0);
    std::uniform_real_distribution<double> eps(0.01, 0.99);
    std::uniform_real_distribution<double> center(0.0, 200.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const double lambda = lam(rng);
        const double delta = static_cast<double>(trial % 3);
        const double e = eps(rng);
        const SpectralWindow w = SpectralWindow::make(center(rng), lambda, delta, e);
        const double bound = 6.0 * e / std::pow(bracket(lambda), 1.0 + delta);
        for (int s = 0; s < 5; ++s) {
            const double eta = std::max(0.0, w.center + unit(rng) * w.half_width);
            EXPECT_LE(std::abs(eta * eta - w.center * w.center), bound);
        }
        const double edge = w.center + w.half_width;
        EXPECT_LE(std::abs(edge * edge - w.center * w.center), bound);
    }
}

TEST(Window, UnionOfProjectionsCountsEachValueOneToThreeTimes)
{
    const auto spectrum = transverse_eigenvalues(TransverseModel::torus({2.0 * M_PI, 5.3}), 6.0);
    for (const double lambda : {0.0, 1.5, 4.0}) {
        const auto cover = window_cover(lambda, 0.0, 0.6, 6.0);
        for (const auto& v : spectrum) {
            int hits = 0;
            for (const auto& w : cover) {
                const auto p = project_window(spectrum, w);
                hits += static_cast<int>(std::count(p.begin(), p.end(), v));
            }
            EXPECT_GE(hits, 1);
            EXPECT_LE(hits, 3);
        }
    }
}
