#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "chaoslab/poisson_solver.hpp"

using namespace chaoslab;
using namespace chaoslab::poisson;

namespace {

// tau * F at grid index k by direct sum over lags that are grid multiples
double direct_convolution(const Solution& s, std::size_t k, double h) {
    const double sigma = s.sigma;
    const auto reach = static_cast<long>(std::ceil(10.0 * sigma / h));
    double acc = 0.0;
    for (long j = -reach; j <= reach; ++j) {
        const long idx = static_cast<long>(k) - j;
        const double y = j * h;
        const double dens = std::exp(-0.5 * y * y / (sigma * sigma)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
        acc += s.F[static_cast<std::size_t>(idx)] * dens * h;
    }
    return acc;
}

} // namespace

TEST(Poisson, Psi0Moments) {
    const double sigma = 1.3;
    const auto p = make_problem(sigma, [sigma](double x) { return psi0(x, sigma); });
    double mass = 0.0, first = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        mass += p.psi[k] * p.h;
        first += p.x[k] * p.psi[k] * p.h;
    }
    EXPECT_NEAR(mass, 0.0, 1e-12);
    // 2 int_0^inf x (1 - Phi(x/sigma)) dx = sigma^2 / 2; the grid sum sits on the
    // kink of x psi0 at 0 (slope jump 1), costing h^2/12 by Euler-Maclaurin
    EXPECT_NEAR(first, sigma * sigma / 2.0 - p.h * p.h / 12.0, 1e-10);
    EXPECT_EQ(psi0(0.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(psi0(0.7, 1.0), -psi0(-0.7, 1.0));
    EXPECT_THROW(psi0(1.0, 0.0), ConfigError);
}

TEST(Poisson, MultiplierBound) {
    // xi^2 e^{-s}/(1 - e^{-s}) = (2/sigma^2) s/(e^s - 1) <= 2/sigma^2
    for (double sigma : {0.5, 1.0, 2.0}) {
        EXPECT_DOUBLE_EQ(regularized_multiplier(0.0, sigma), 2.0 / (sigma * sigma));
        EXPECT_LE(max_multiplier(4096, sigma / 100.0, sigma), 2.0 / (sigma * sigma) * (1.0 + 1e-12));
        EXPECT_LT(regularized_multiplier(3.0, sigma), regularized_multiplier(1.0, sigma));
    }
}

TEST(Poisson, SmoothStepRecoversExactSolution) {
    for (double s : {0.5, 1.0, 2.0}) {
        const double sigma = 1.0;
        const auto p = make_problem(sigma, smooth_step_psi(s, sigma), 30.0);
        const auto sol = solve(p);
        double err = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) err = std::max(err, std::abs(sol.F[k] - normal_cdf(p.x[k] / s)));
        EXPECT_LT(err, 1e-6) << s;
        EXPECT_NEAR(sol.predicted, 1.0, 1e-6);
        EXPECT_NEAR(sol.asymptote, 1.0, 1e-6);
    }
}

TEST(Poisson, Psi0AsymptoteMatchesFirstMoment) {
    for (double sigma : {0.5, 1.0, 2.0}) {
        const auto p = make_problem(sigma, [sigma](double x) { return psi0(x, sigma); });
        const auto sol = solve(p);
        EXPECT_NEAR(sol.asymptote, sol.predicted, 1e-4);
        EXPECT_NEAR(sol.predicted, 1.0 - p.h * p.h / (6.0 * sigma * sigma), 1e-9);
        EXPECT_LT(sol.residual, 1e-6);
    }
}

TEST(Poisson, ResidualAgainstDirectQuadrature) {
    const double sigma = 1.0;
    const auto p = make_problem(sigma, [sigma](double x) { return psi0(x, sigma); });
    const auto sol = solve(p);
    for (double x : {-3.0, -0.5, 0.25, 1.0, 4.0}) {
        const auto k = static_cast<std::size_t>(std::llround(x / p.h + static_cast<double>(p.size()) / 2.0));
        ASSERT_NEAR(p.x[k], x, 1e-9);
        EXPECT_NEAR(sol.F[k] - direct_convolution(sol, k, p.h), p.psi[k], 1e-6) << x;
    }
}

TEST(Poisson, Linearity) {
    const double sigma = 1.0;
    auto a = smooth_step_psi(0.7, sigma);
    auto b = [sigma](double x) { return psi0(x, sigma); };
    const auto fa = solve(make_problem(sigma, a));
    const auto fb = solve(make_problem(sigma, b));
    const auto fab = solve(make_problem(sigma, [&](double x) { return 2.0 * a(x) - 0.5 * b(x); }));
    for (std::size_t k = 0; k < fa.F.size(); k += 97) EXPECT_NEAR(fab.F[k], 2.0 * fa.F[k] - 0.5 * fb.F[k], 1e-9);
}

TEST(Poisson, TranslationCovariance) {
    const double sigma = 1.0, shift = 1.5; // 150 grid steps
    auto a = smooth_step_psi(0.8, sigma);
    const auto f = solve(make_problem(sigma, a));
    const auto g = solve(make_problem(sigma, [&](double x) { return a(x - shift); }));
    const std::size_t d = 150;
    for (std::size_t k = d + 500; k + 500 < f.F.size(); k += 101) EXPECT_NEAR(g.F[k], f.F[k - d], 1e-7);
}

TEST(Poisson, ZeroSourceGivesZero) {
    const auto sol = solve(make_problem(1.0, [](double) { return 0.0; }));
    for (double v : sol.F) EXPECT_EQ(v, 0.0);
}

TEST(Poisson, RejectsBadSources) {
    EXPECT_THROW(solve(make_problem(1.0, [](double x) { return std::exp(-0.001 * x * x) * x; })), ConfigError);
    EXPECT_THROW(solve(make_problem(1.0, [](double x) { return std::exp(-x * x); })), ConfigError);
    EXPECT_THROW(make_problem(-1.0, [](double) { return 0.0; }), ConfigError);
}
