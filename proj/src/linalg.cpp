#include "prodwave/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include <Eigen/Dense>

namespace prodwave {

TridiagonalCholesky::TridiagonalCholesky(const RealVector& diag, const RealVector& off)
{
    const Eigen::Index n = diag.size();
    require(n >= 1 && off.size() == n - 1, "TridiagonalCholesky: inconsistent band sizes");
    l_diag_.resize(n);
    l_sub_.resize(std::max<Eigen::Index>(n - 1, 0));
    double prev_sub = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pivot = diag[i] - prev_sub * prev_sub;
        if (!(pivot > 0.0)) {
            throw SingularSystem("TridiagonalCholesky: matrix is not positive definite (row " +
                                 std::to_string(i) + ")");
        }
        l_diag_[i] = std::sqrt(pivot);
        if (i + 1 < n) {
            l_sub_[i] = off[i] / l_diag_[i];
            prev_sub = l_sub_[i];
        }
    }
}

namespace {

// Singular triplet of the small upper-bidiagonal projection.
struct SmallTriplet {
    double sigma;
    Eigen::VectorXd left;
    Eigen::VectorXd right;
};

SmallTriplet top_triplet(const std::vector<double>& alpha, const std::vector<double>& beta)
{
    const auto k = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        b(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < k) {
            b(i, i + 1) = beta[static_cast<std::size_t>(i)];
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return {svd.singularValues()(0), svd.matrixU().col(0), svd.matrixV().col(0)};
}

void reorthogonalize(ComplexVector& w, const std::vector<ComplexVector>& basis)
{
    // two passes of classical Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) {
            w -= q * q.dot(w);
        }
    }
}

} // namespace

LargestSingularValue largest_singular_value(
    const std::function<ComplexVector(const ComplexVector&)>& apply,
    const std::function<ComplexVector(const ComplexVector&)>& apply_adjoint,
    Eigen::Index n, double relative_tolerance, int max_iterations)
{
    require(n >= 1, "largest_singular_value: empty operator");
    std::mt19937_64 rng(0x5eed5eedULL);
    std::normal_distribution<double> normal;
    ComplexVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v[i] = Complex(normal(rng), normal(rng));
    }
    v.normalize();

    std::vector<ComplexVector> us;
    std::vector<ComplexVector> vs;
    std::vector<double> alpha;
    std::vector<double> beta;
    vs.push_back(v);

    const int limit = static_cast<int>(std::min<Eigen::Index>(n, max_iterations));
    LargestSingularValue out;
    const auto finish = [&](const SmallTriplet& t, int iterations, double residual) {
        out.value = t.sigma;
        out.iterations = iterations;
        out.residual = residual;
        out.right_vector = ComplexVector::Zero(n);
        for (Eigen::Index i = 0; i < t.right.size(); ++i) {
            out.right_vector += t.right(i) * vs[static_cast<std::size_t>(i)];
        }
        return out;
    };
    for (int j = 0; j < limit; ++j) {
        ComplexVector u = apply(vs.back());
        if (j > 0) {
            u -= beta.back() * us.back();
        }
        reorthogonalize(u, us);
        const double a = u.norm();
        alpha.push_back(a);
        if (a == 0.0) {
            // invariant subspace reached: the projection is exact
            return finish(top_triplet(alpha, beta), j + 1, 0.0);
        }
        u /= a;
        us.push_back(u);

        ComplexVector w = apply_adjoint(u) - a * vs.back();
        reorthogonalize(w, vs);
        const double b = w.norm();

        const auto t = top_triplet(alpha, beta);
        const double residual = b * std::abs(t.left(static_cast<Eigen::Index>(alpha.size()) - 1));
        if (residual <= relative_tolerance * t.sigma || b == 0.0 || j + 1 == n) {
            return finish(t, j + 1, residual);
        }
        beta.push_back(b);
        vs.push_back(w / b);
    }
    throw SolverFailure("largest_singular_value: no convergence after " + std::to_string(limit) +
                        " iterations");
}

std::optional<PowerLawFit> fit_power_law(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size(), "fit_power_law: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 2) {
        return std::nullopt;
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, "fit_power_law: values must be positive");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        const double dy = std::log(y[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) {
        return std::nullopt;
    }
    PowerLawFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.points = n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::log(y[i]) - (fit.intercept + fit.slope * std::log(x[i]));
        ss_res += r * r;
    }
    fit.residual_rms = std::sqrt(ss_res / static_cast<double>(n));
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return fit;
}

namespace {
std::atomic<int> g_max_threads{1};
}

void set_max_threads(int threads)
{
    require(threads >= 1, "thread count must be at least 1");
    g_max_threads.store(threads);
}

int max_threads() { return g_max_threads.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    pool.clear();
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace prodwave
