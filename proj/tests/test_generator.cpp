#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prodwave/cli.hpp"
#include "prodwave/config.hpp"
#include "prodwave/generator.hpp"

using namespace prodwave;

namespace {

GeneratorCoefficients coeffs(double a_left, double a_right, double b_left = 0.0, double b_right = 0.0)
{
    GeneratorCoefficients c;
    c.a_left = a_left;
    c.a_right = a_right;
    c.b_left = b_left;
    c.b_right = b_right;
    return c;
}

ComplexVector random_state(Eigen::Index size, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    ComplexVector x(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        x[i] = Complex(normal(rng), normal(rng));
    }
    return x;
}

double min_distance(const ModeSpectrum& s, Complex z)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : s.eigenvalues) {
        best = std::min(best, std::abs(e - z));
    }
    return best;
}

} // namespace

TEST(Generator, UndampedSpectrumIsImaginary)
{
    const CrossSection disc(60);
    const ModeGenerator gen(disc, coeffs(0.0, 0.0), 0.0);
    const ModeSpectrum s = mode_spectrum(gen);
    for (const auto& z : s.eigenvalues) {
        EXPECT_LE(std::abs(z.real()), 1e-6);
    }
}

TEST(Generator, TransverseShiftPushesSpectrumOut)
{
    const CrossSection disc(60);
    const ModeGenerator gen(disc, coeffs(0.0, 0.0), 4.0);
    for (const auto& z : mode_spectrum(gen).eigenvalues) {
        EXPECT_GE(std::abs(z.imag()), 2.0 - 1e-8);
    }
}

TEST(Generator, ConstraintExcludesConstants)
{
    const CrossSection disc(20);
    const ModeGenerator gen = assemble_mode_generator(disc, DampingProfile{}, 0.0);
    ASSERT_TRUE(gen.constraint_active());
    ComplexVector c = ComplexVector::Zero(gen.state_size());
    c.head(gen.n_nodes()).setConstant(2.5);
    EXPECT_NEAR(std::abs(gen.constraint(c) - Complex(2.5 * 2.0)), 0.0, 1e-14);
    EXPECT_EQ(gen.constraint_of_constant(), 2.0);
    EXPECT_FALSE(assemble_mode_generator(disc, DampingProfile{}, 1.0).constraint_active());
    DampingProfile with_b;
    with_b.b_left = 0.5;
    EXPECT_FALSE(assemble_mode_generator(disc, with_b, 0.0).constraint_active());
}

TEST(Generator, ConstrainedGramIsPositiveDefinite)
{
    const CrossSection disc(24);
    const auto dense = oracle::dense_mode(24, coeffs(1.0, 0.5), 0.0);
    const Eigen::MatrixXd p = oracle::state_basis(dense);
    const Eigen::MatrixXd g = p.transpose() * dense.gram * p;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    EXPECT_GT(es.eigenvalues().minCoeff(), 1e-10);
}

TEST(Generator, DissipationIdentity)
{
    const CrossSection disc(50);
    for (const auto& [c, eta_sq] : std::vector<std::pair<GeneratorCoefficients, double>>{
             {coeffs(1.0, 1.0), 0.0}, {coeffs(0.3, 0.9, 0.2, 0.0), 0.0}, {coeffs(0.0, 0.5), 7.0}}) {
        const ModeGenerator gen(disc, c, eta_sq);
        const ComplexVector u = random_state(gen.state_size(), 5);
        const double lhs = gen.gram_inner(gen.apply(u), u).real();
        const double rhs = -gen.boundary_dissipation(u);
        EXPECT_NEAR(lhs, rhs, 1e-8 * std::max(1.0, std::abs(rhs)));
    }
}

TEST(Generator, ReducedCoordinatesCarryTheEnergyNorm)
{
    const CrossSection disc(30);
    for (const double eta_sq : {0.0, 2.0}) {
        const ModeGenerator gen(disc, coeffs(1.0, 0.4), eta_sq);
        const ComplexVector u = random_state(gen.state_size(), 9);
        const ComplexVector x = gen.to_reduced(u);
        EXPECT_NEAR(x.squaredNorm(), gen.energy_norm_sq(u), 1e-9 * gen.energy_norm_sq(u));
        const ComplexVector back = gen.from_reduced(x);
        EXPECT_NEAR(gen.energy_norm_sq(back), gen.energy_norm_sq(u), 1e-9 * gen.energy_norm_sq(u));
        if (gen.constraint_active()) {
            EXPECT_LT(std::abs(gen.constraint(back)), 1e-10 * std::sqrt(gen.energy_norm_sq(u)));
        } else {
            EXPECT_LT((back - u).norm(), 1e-9 * u.norm());
        }
    }
}

TEST(Generator, TanhRootsWithOneDampedEnd)
{
    const CrossSection disc(800);
    const ModeGenerator gen(disc, coeffs(0.0, 0.5), 0.0);
    const ModeSpectrum s = mode_spectrum(gen);
    for (int n = -5; n <= 5; ++n) {
        const Complex root = oracle::tanh_root(0.5, n);
        if (n == 0) {
            // z = 0 belongs to the constants, which the constraint removes
            EXPECT_LE(min_distance(s, root), 1e-2);
            continue;
        }
        EXPECT_LE(min_distance(s, root), 1e-2) << "n=" << n;
    }
    EXPECT_NEAR(oracle::tanh_root(0.5, 1).real(), -0.5493, 1e-4);
}

TEST(Generator, PerfectAbsorptionPushesLowSpectrumLeft)
{
    double previous = 0.0;
    for (const int n : {50, 100, 200}) {
        const CrossSection disc(n);
        const ModeSpectrum s = mode_spectrum(assemble_mode_generator(disc, DampingProfile{}, 0.0));
        double band_max = -std::numeric_limits<double>::infinity();
        for (const auto& z : s.eigenvalues) {
            if (std::abs(z.imag()) <= 10.0) {
                band_max = std::max(band_max, z.real());
            }
        }
        EXPECT_LE(band_max, -1.0) << "N=" << n;
        if (n > 50) {
            EXPECT_LT(band_max, previous);
        }
        previous = band_max;
    }
}

TEST(Generator, AbscissaIsNegativeWithDamping)
{
    const CrossSection disc(40);
    for (const auto& c : {coeffs(1.0, 1.0), coeffs(0.0, 0.5), coeffs(0.2, 0.0, 0.1, 0.0)}) {
        for (const double eta_sq : {0.0, 1.0, 49.0}) {
            const ModeSpectrum s = mode_spectrum(ModeGenerator(disc, c, eta_sq));
            EXPECT_LT(s.abscissa, 0.0) << "eta^2=" << eta_sq;
            for (const auto& z : s.eigenvalues) {
                EXPECT_LT(min_distance(s, std::conj(z)), 1e-8 * std::max(1.0, std::abs(z)));
            }
        }
    }
}

TEST(ModeResolvent, MatchesDenseOracle)
{
    const int n = 40;
    const CrossSection disc(n);
    struct Case {
        GeneratorCoefficients c;
        double eta_sq;
        double lambda;
    };
    for (const auto& tc : {Case{coeffs(1.0, 0.5), 0.0, 3.0}, Case{coeffs(1.0, 1.0), 9.0, 4.0},
                           Case{coeffs(0.4, 0.0, 0.3, 0.0), 0.0, 2.0}, Case{coeffs(0.0, 0.7), 2.0, 0.0}}) {
        const double got = mode_resolvent_norm(ModeGenerator(disc, tc.c, tc.eta_sq), tc.lambda);
        const double want = oracle::resolvent_norm(oracle::dense_mode(n, tc.c, tc.eta_sq), tc.lambda);
        EXPECT_NEAR(got, want, 1e-7 * want) << "eta^2=" << tc.eta_sq << " lambda=" << tc.lambda;
    }
}

TEST(ModeResolvent, SymmetricInFrequency)
{
    const CrossSection disc(80);
    const ModeGenerator gen = assemble_mode_generator(disc, DampingProfile{}, 16.0);
    EXPECT_NEAR(mode_resolvent_norm(gen, 6.3), mode_resolvent_norm(gen, -6.3), 1e-9 * mode_resolvent_norm(gen, 6.3));
}

TEST(ModeResolvent, FarFromSpectrumIsControlledByDistance)
{
    const CrossSection disc(80);
    const ModeGenerator gen = assemble_mode_generator(disc, DampingProfile{}, 25.0);
    const double dist = min_distance(mode_spectrum(gen), Complex(0.0, 0.0));
    const double norm = mode_resolvent_norm(gen, 0.0);
    EXPECT_GE(norm, (1.0 - 1e-9) / dist);
    EXPECT_LE(norm, 10.0 / dist);
}

TEST(ModeResolvent, QuasimodeLowerBound)
{
    const CrossSection disc(400);
    const double k = 16.0;
    const double lambda = std::sqrt(M_PI * M_PI + k * k);
    const ModeGenerator gen = assemble_mode_generator(disc, DampingProfile{}, k * k);
    EXPECT_GE(mode_resolvent_norm(gen, lambda), lambda * lambda / (std::pow(M_PI, 3) * std::sqrt(2.0)) * 0.95);
}

TEST(ModeResolvent, NearSingularOnTheSpectrum)
{
    const CrossSection disc(30);
    const ModeGenerator gen(disc, coeffs(0.0, 0.0), 4.0);
    EXPECT_THROW(mode_resolvent_norm(gen, 2.0), NearSingular);
}

TEST(ModeResolvent, NearestEigenvalueRefinesAGuess)
{
    const CrossSection disc(200);
    const ModeGenerator gen(disc, coeffs(0.0, 0.5), 0.0);
    const Complex z = nearest_eigenvalue(gen, Complex(-0.5, 3.0));
    EXPECT_LE(std::abs(z - oracle::tanh_root(0.5, 1)), 1e-2);
    EXPECT_LE(min_distance(mode_spectrum(gen), z), 1e-8);
}

TEST(ProductNorm, LowFrequencyMaximumMatchesModeComparison)
{
    const int n = 80;
    const CrossSection disc(n);
    const TransverseModel circle = TransverseModel::circle(2.0 * M_PI);
    const ProductNorm p = product_resolvent_norm(circle, disc, DampingProfile{}, 0.5);
    const GeneratorCoefficients c = GeneratorCoefficients::from(DampingProfile{});
    const double zero = oracle::resolvent_norm(oracle::dense_mode(n, c, 0.0), 0.5);
    const double one = oracle::resolvent_norm(oracle::dense_mode(n, c, 1.0), 0.5);
    // the eta = 1 block dominates: its norm is 2 against about 0.64 for eta = 0
    EXPECT_GT(one, zero);
    EXPECT_EQ(p.argmax_eta, 1.0);
    EXPECT_NEAR(p.norm, std::max(zero, one), 1e-8 * p.norm);
}

TEST(ProductNorm, ResonantFrequencyPeaksOnTheMatchingMode)
{
    const CrossSection disc(160);
    const TransverseModel circle = TransverseModel::circle(2.0 * M_PI);
    const double lambda = std::sqrt(M_PI * M_PI + 64.0);
    const ProductNorm p = product_resolvent_norm(circle, disc, DampingProfile{}, lambda);
    EXPECT_NEAR(p.argmax_eta, 8.0, 1e-12);
    for (const auto& s : transverse_eigenvalues(circle, lambda + p.margin)) {
        EXPECT_GE(p.norm, mode_resolvent_norm(assemble_mode_generator(disc, DampingProfile{}, s.eta * s.eta), lambda));
    }
}

TEST(ProductNorm, DirectSumEqualsMaximumOfBlocks)
{
    const int n = 30;
    const CrossSection disc(n);
    const GeneratorCoefficients c = coeffs(1.0, 0.6);
    const std::vector<double> etas = {1.0, 2.0, 3.5};
    std::vector<oracle::DenseMode> modes;
    for (double e : etas) {
        modes.push_back(oracle::dense_mode(n, c, e * e));
    }
    const auto block = modes.front().a.rows();
    oracle::DenseMode sum;
    sum.a = Eigen::MatrixXd::Zero(3 * block, 3 * block);
    sum.gram = Eigen::MatrixXd::Zero(3 * block, 3 * block);
    sum.ell = Eigen::VectorXd::Zero(3 * block);
    for (int i = 0; i < 3; ++i) {
        sum.a.block(i * block, i * block, block, block) = modes[i].a;
        sum.gram.block(i * block, i * block, block, block) = modes[i].gram;
    }
    for (const double lambda : {0.0, 1.7, 3.2}) {
        double best = 0.0;
        for (double e : etas) {
            best = std::max(best, mode_resolvent_norm(ModeGenerator(disc, c, e * e), lambda));
        }
        EXPECT_NEAR(oracle::resolvent_norm(sum, lambda), best, 1e-7 * best);
    }
}

TEST(ResolventFit, SyntheticPowerLaws)
{
    const std::vector<double> lambdas = logspace(5.0, 80.0, 12);
    std::vector<double> square;
    std::vector<double> cube;
    for (double l : lambdas) {
        square.push_back(l * l);
        cube.push_back(l * l * l);
    }
    EXPECT_NEAR(fit_resolvent_exponent(lambdas, square).slope, 2.0, 1e-12);
    const double slope = fit_resolvent_exponent(lambdas, cube).slope;
    EXPECT_NEAR(slope, 3.0, 1e-12);
    EXPECT_NEAR(predict_rate(slope - 2.0).rate_exponent, 1.0 / 3.0, 1e-12);
}

TEST(ResolventFit, Preconditions)
{
    const std::vector<double> few = logspace(5.0, 80.0, 9);
    EXPECT_THROW(fit_resolvent_exponent(few, few), InvalidInput);
    const std::vector<double> low = logspace(4.0, 80.0, 12);
    EXPECT_THROW(fit_resolvent_exponent(low, low), InvalidInput);
}

TEST(ResolventSweepTest, EnvelopeDominatesPointwiseNorm)
{
    const CrossSection disc(160);
    const auto grid = logspace(2.0, 12.0, 6);
    const ResolventSweep sweep = resolvent_sweep(TransverseModel::circle(2.0 * M_PI), disc, DampingProfile{}, grid);
    ASSERT_EQ(sweep.rows.size(), grid.size());
    double running = 0.0;
    for (const auto& row : sweep.rows) {
        EXPECT_GE(row.envelope, row.product_norm);
        EXPECT_GE(row.envelope, running);
        running = row.envelope;
    }
    EXPECT_FALSE(sweep.peaks.empty());
    EXPECT_THROW(resolvent_sweep(TransverseModel::circle(2.0 * M_PI), CrossSection(40), DampingProfile{}, grid),
                 InvalidInput);

    const auto dir = std::filesystem::temp_directory_path() / "prodwave_resolvent";
    std::filesystem::create_directories(dir);
    write_resolvent_csv((dir / "r.csv").string(), sweep);
    std::ifstream in(dir / "r.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "lambda,product_norm,argmax_eta,envelope");
}
