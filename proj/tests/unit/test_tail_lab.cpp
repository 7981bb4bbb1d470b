#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "chaoslab/chaos_measure.hpp"
#include "chaoslab/tail_lab.hpp"

using namespace chaoslab;

namespace {

// P(Y > y) = 1/y on y >= 1
std::vector<double> pareto(std::size_t n, std::uint64_t seed) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(seed, i);
        v[i] = 1.0 / (1.0 - rng.uniform());
    }
    return v;
}

// membership in C_t(I) = intersection over x in I of
// {(x', y'): y' > max(2|x' - x|, e^{-t}), |x' - x| < 1/2}; only the endpoints of I matter
bool in_cone(double a, double b, double xp, double yp, double t) {
    const double far = std::max(std::abs(xp - a), std::abs(xp - b));
    return far < 0.5 && yp > std::max(2.0 * far, std::exp(-t));
}

} // namespace

TEST(TailLab, ParetoSlopeAndPlateau) {
    const auto y = pareto(1000000, 31);
    const auto fit = survival_slope(y);
    EXPECT_NEAR(fit.slope, -1.0, 0.05);
    const auto p = tail_plateau(y);
    EXPECT_NEAR(p.level, 1.0, 0.3);
    EXPECT_LT(p.ratio(), 2.0);
}

TEST(TailLab, SurvivalCurveAgainstExact) {
    const auto y = pareto(200000, 32);
    const std::vector<double> lam{2.0, 10.0, 100.0};
    const auto c = tail_curve(y, lam);
    for (std::size_t i = 0; i < lam.size(); ++i) {
        EXPECT_LE(c.ci_lo[i], 1.0 / lam[i] * 1.02);
        EXPECT_GE(c.ci_hi[i], 1.0 / lam[i] * 0.98);
        EXPECT_TRUE(c.resolvable[i]);
    }
    const std::vector<double> bad{3.0, 1.0};
    EXPECT_THROW(tail_curve(y, bad), ConfigError);
}

TEST(TailLab, UnresolvableFlag) {
    const std::vector<double> y{1, 2, 3, 4, 5};
    const std::vector<double> lam{0.5};
    EXPECT_FALSE(tail_curve(y, lam).resolvable[0]);
}

TEST(TailLab, FWindowForPareto) {
    // E[Y 1{Y in (a, b]}] = log(b/a) for a >= 1
    const auto y = pareto(1000000, 33);
    const std::vector<double> xs{0.0, 1.0, 2.0};
    const auto f2 = f_alpha_beta(y, 1.0, 2.0, xs);
    const auto f4 = f_alpha_beta(y, 1.0, 4.0, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_NEAR(f2.estimate[i], std::log(2.0), 0.05);
        EXPECT_LE(f2.ci_lo[i], std::log(2.0) + 1e-9);
        EXPECT_GE(f2.ci_hi[i], std::log(2.0) - 1e-9);
        EXPECT_NEAR(f4.estimate[i] / f2.estimate[i], 2.0, 0.1);
    }
}

TEST(TailLab, TallyIsExactlyAdditive) {
    const auto y = pareto(50000, 34);
    const std::vector<double> xs{0.0, 0.5, 3.0};
    const auto a = f_alpha_beta(y, 1.0, 2.0, xs);
    const auto b = f_alpha_beta(y, 2.0, 5.0, xs);
    const auto ab = f_alpha_beta(y, 1.0, 5.0, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_TRUE(a.tally[i] + b.tally[i] == ab.tally[i]);
    EXPECT_EQ(from_tally(to_tally(1.5)), 1.5);
    EXPECT_THROW(to_tally(-1.0), NumericError);
}

TEST(TailLab, C1IntegrandByHand) {
    EXPECT_NEAR(c1_integrand(1.0, 1.0), 2.0, 1e-15);
    EXPECT_NEAR(c1_integrand(2.0, 0.0), 0.0, 0.0);
    EXPECT_THROW(c1_integrand(0.0, 1.0), NumericError);
    const std::vector<double> m0{1.0, 3.0}, m1{3.0, 1.0};
    const auto e = estimate_c1(m0, m1, true);
    const double want = 0.5 * (c1_integrand(1, 3) + c1_integrand(3, 1));
    EXPECT_NEAR(e.value, want, 1e-14);
}

TEST(TailLab, PeyriereWeights) {
    const auto y = pareto(1000, 35);
    const auto s = peyriere_samples(36, 200000, y);
    std::vector<double> w, j0;
    for (const auto& p : s) {
        w.push_back(p.weight);
        j0.push_back(p.j == 0);
    }
    // E(W0 + W1) = 1 and by symmetry P(j = 0) = 1/2
    EXPECT_NEAR(stats::mean(w), 1.0, 4.0 * stats::standard_error(w));
    EXPECT_NEAR(stats::mean(j0), 0.5, 4.0 * stats::standard_error(j0));
    const auto q = check_qb(s, y);
    EXPECT_TRUE(q.mean_weight.contains(1.0));
    EXPECT_TRUE(q.ks_pass()) << q.neg_log_w.statistic << " " << q.neg_log_w.critical;
    EXPECT_TRUE(q.moment_pass());
}

TEST(TailLab, TailModificationScales) {
    // mass of [0, alpha] = alpha * Y, so lambda P(alpha Y > lambda) / alpha = 1 whenever lambda >= alpha
    const auto y = pareto(200000, 37);
    const std::vector<double> alphas{0.5, 0.25, 0.125};
    std::vector<std::vector<double>> masses;
    for (double a : alphas) {
        std::vector<double> v;
        for (double x : y) v.push_back(a * x);
        masses.push_back(v);
    }
    const std::vector<double> lam{1.0, 10.0, 100.0};
    for (const auto& row : tail_modification_check(alphas, masses, lam)) EXPECT_NEAR(row.constant, 1.0, 0.1);
}

TEST(TailLab, HalfConesAreDisjoint) {
    // hyperbolic area of C(I0) and C(I1) over a fine grid; zero overlap means independent halves
    const double t = std::log(1024.0);
    double overlap = 0.0, area0 = 0.0;
    const int nx = 800, ny = 800;
    for (int i = 0; i < nx; ++i) {
        const double xp = -0.5 + 2.0 * (i + 0.5) / nx;
        for (int k = 0; k < ny; ++k) {
            const double yp = 2.0 * (k + 0.5) / ny;
            const double w = (2.0 / nx) * (2.0 / ny) / (yp * yp);
            const bool a = in_cone(0.0, 0.5, xp, yp, t);
            const bool b = in_cone(0.5, 1.0, xp, yp, t);
            if (a) area0 += w;
            if (a && b) overlap += w;
        }
    }
    EXPECT_GT(area0, 0.1);
    EXPECT_EQ(overlap, 0.0);
}
