#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "prodwave/quasimode.hpp"

using namespace prodwave;

namespace {

const TransverseModel kCircle = TransverseModel::circle(2.0 * M_PI);
constexpr Complex kI{0.0, 1.0};

} // namespace

TEST(DirichletModeTest, FrequencyAndNormalDerivatives)
{
    const CrossSection disc(200);
    const DirichletMode one = dirichlet_mode(disc, 1);
    EXPECT_DOUBLE_EQ(one.mu, M_PI);
    EXPECT_NEAR(one.dn_left, -std::sqrt(2.0) * M_PI, 1e-14);
    EXPECT_NEAR(one.dn_right, -std::sqrt(2.0) * M_PI, 1e-14);
    EXPECT_EQ(one.w0[0], 0.0);
    EXPECT_EQ(one.w0[disc.n_nodes() - 1], 0.0);
    EXPECT_NEAR(disc.l2_norm_sq(one.w0.cast<Complex>()), 1.0, 1e-12);

    const DirichletMode two = dirichlet_mode(disc, 2);
    EXPECT_DOUBLE_EQ(two.mu, 2.0 * M_PI);
    EXPECT_NEAR(two.dn_left, -2.0 * std::sqrt(2.0) * M_PI, 1e-13);
    EXPECT_NEAR(two.dn_right, 2.0 * std::sqrt(2.0) * M_PI, 1e-13);
    // one-sided difference quotients agree with the closed form
    const double h = disc.h();
    EXPECT_NEAR(-(two.w0[1] - two.w0[0]) / h, two.dn_left, 0.01 * std::abs(two.dn_left));
    EXPECT_THROW(dirichlet_mode(disc, 0), InvalidInput);
}

TEST(W1, SymmetricCaseIsConstant)
{
    const CrossSection disc(64);
    const ComplexVector w1 = build_w1(disc, DampingProfile{}, dirichlet_mode(disc, 1));
    const Complex want = kI * std::sqrt(2.0) * M_PI;
    for (Eigen::Index j = 0; j < w1.size(); ++j) {
        EXPECT_NEAR(std::abs(w1[j] - want), 0.0, 1e-14);
    }
}

TEST(W1, AsymmetricHermiteBlend)
{
    DampingProfile d;
    d.a0_right = d.a_right = 0.5;
    d.c0 = 0.5;
    for (const int n_cells : {100, 200}) {
        const CrossSection disc(n_cells);
        const DirichletMode w0 = dirichlet_mode(disc, 1);
        const auto [v0, v1] = w1_boundary_values(d, w0);
        EXPECT_NEAR(std::abs(v0 - kI * std::sqrt(2.0) * M_PI), 0.0, 1e-13);
        EXPECT_NEAR(std::abs(v1 - 2.0 * kI * std::sqrt(2.0) * M_PI), 0.0, 1e-13);
        const ComplexVector w1 = build_w1(disc, d, w0);
        const Eigen::Index last = w1.size() - 1;
        EXPECT_EQ(w1[0], v0);
        EXPECT_NEAR(std::abs(w1[last] - v1), 0.0, 1e-12);
        const double h = disc.h();
        // second-order one-sided slopes vanish up to O(h^2)
        const double slope_left = std::abs(-3.0 * w1[0] + 4.0 * w1[1] - w1[2]) / (2.0 * h);
        const double slope_right = std::abs(3.0 * w1[last] - 4.0 * w1[last - 1] + w1[last - 2]) / (2.0 * h);
        const double scale = std::abs(v1 - v0);
        EXPECT_LE(slope_left, 10.0 * scale * h * h);
        EXPECT_LE(slope_right, 10.0 * scale * h * h);
    }
}

TEST(W1, RejectsUndampedEndpoint)
{
    const CrossSection disc(64);
    DampingProfile d;
    d.a0_left = d.a_left = 0.0;
    EXPECT_THROW(build_w1(disc, d, dirichlet_mode(disc, 1)), InvalidInput);
}

TEST(QuasimodeFamily, FrequenciesAndStoredIdentity)
{
    const CrossSection disc(640);
    const QuasimodeReport r = build_quasimode_family(kCircle, disc, DampingProfile{}, 1, {4, 8, 16}, false);
    ASSERT_EQ(r.entries.size(), 3U);
    EXPECT_NEAR(r.entries[0].lambda, std::sqrt(M_PI * M_PI + 16.0), 1e-14);
    EXPECT_NEAR(r.entries[0].lambda, 5.08622, 1e-5);
    for (const auto& e : r.entries) {
        EXPECT_NEAR(e.lambda * e.lambda - e.eta * e.eta, r.mu * r.mu, 1e-12 * e.lambda * e.lambda);
        EXPECT_LE(e.boundary_defect, 1e-10);
    }
}

TEST(QuasimodeFamily, ResidualMatchesTheExtensionTerm)
{
    const CrossSection disc(640);
    const QuasimodeReport r = build_quasimode_family(kCircle, disc, DampingProfile{}, 1, {16, 32, 64}, false);
    for (const auto& e : r.entries) {
        // residual ~ lambda^{-1} mu^2 |w1| / (sqrt(2) lambda) = pi^3 / lambda^2
        const double model = std::pow(M_PI, 3) / (e.lambda * e.lambda);
        EXPECT_NEAR(e.residual / model, 1.0, 0.05) << "k=" << e.k;
    }
    ASSERT_TRUE(r.residual_fit.has_value());
    EXPECT_NEAR(r.residual_fit->slope, -2.0, 0.15);
}

TEST(QuasimodeFamily, LowerBoundHoldsAndIsTight)
{
    const CrossSection disc(640);
    const QuasimodeReport r = build_quasimode_family(kCircle, disc, DampingProfile{}, 1, {4, 8, 16, 32, 64});
    const LowerBoundCheck check = verify_lower_bound(r);
    EXPECT_GE(check.min_product, 1.0 - 1e-8);
    for (const auto& e : r.entries) {
        EXPECT_LE(e.product_ratio, 50.0);
    }
    EXPECT_LE(check.slope_gap, 0.3);
    EXPECT_NE(check.conclusion.find("decay exponent cannot exceed 1/2 + fit-tolerance"), std::string::npos);
    EXPECT_EQ(check.table.size(), r.entries.size() + 1);
}

TEST(QuasimodeFamily, DoctoredReportIsInconsistent)
{
    const CrossSection disc(200);
    QuasimodeReport r = build_quasimode_family(kCircle, disc, DampingProfile{}, 1, {4, 8});
    r.entries[1].resolvent_norm *= 0.5;
    r.entries[1].product_ratio = r.entries[1].resolvent_norm * r.entries[1].residual * 1e-3;
    EXPECT_THROW(verify_lower_bound(r), DiscretizationInconsistency);
    QuasimodeReport bare = build_quasimode_family(kCircle, disc, DampingProfile{}, 1, {4}, false);
    EXPECT_THROW(verify_lower_bound(bare), InvalidInput);
}

TEST(QuasimodeFamily, Preconditions)
{
    EXPECT_THROW(build_quasimode_family(kCircle, CrossSection(100), DampingProfile{}, 1, {64}), InvalidInput);
    EXPECT_THROW(build_quasimode_family(kCircle, CrossSection(100), DampingProfile{}, 1, {0}), InvalidInput);
    EXPECT_THROW(build_quasimode_family(kCircle, CrossSection(100), DampingProfile{}, 1, {}), InvalidInput);
}

TEST(QuasimodeFamily, CsvColumns)
{
    const CrossSection disc(200);
    const QuasimodeReport r = build_quasimode_family(kCircle, disc, DampingProfile{}, 1, {4, 8});
    const auto path = std::filesystem::temp_directory_path() / "prodwave_quasimode.csv";
    write_quasimode_csv(path.string(), r);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "k,eta,lambda,residual,resolvent_norm,product_ratio");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 2);
}
