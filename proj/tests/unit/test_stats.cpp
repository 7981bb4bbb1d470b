#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "chaoslab/stats.hpp"

using namespace chaoslab;
using namespace chaoslab::stats;

TEST(Stats, KsCoefficient) { EXPECT_NEAR(ks_coefficient(0.01), 1.6276, 1e-4); }

TEST(Stats, KsOnExactQuantiles) {
    // plotting positions (i + 1/2)/n give D = 1/(2n) exactly
    std::vector<double> u(1000);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = (i + 0.5) / 1000.0;
    const auto r = ks_one_sample(u, [](double x) { return x; });
    EXPECT_NEAR(r.statistic, 0.0005, 1e-12);
    EXPECT_TRUE(r.pass());
}

TEST(Stats, KsRejectsShiftedSample) {
    std::vector<double> a(5000), b(5000);
    RngStream rng(1, 0);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = rng.normal() + 0.2;
    EXPECT_FALSE(ks_two_sample(a, b).pass());
    EXPECT_FALSE(ks_one_sample(b, [](double x) { return normal_cdf(x); }).pass());
}

TEST(Stats, TwoSampleDistanceByHand) {
    // ECDFs of {1,2,3} and {2.5}: largest gap 2/3 at x in [2, 2.5)
    EXPECT_NEAR(ks_distance({1, 2, 3}, {2.5}), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(ks_distance({1, 2}, {1, 2}), 0.0, 0.0);
}

TEST(Stats, UnitWeightsMatchPlainKs) {
    std::vector<double> x(2000), w(2000, 1.0);
    RngStream rng(2, 0);
    for (auto& v : x) v = rng.normal();
    const auto cdf = [](double v) { return normal_cdf(v); };
    const auto plain = ks_one_sample(x, cdf);
    const auto weighted = ks_weighted_one_sample(x, w, cdf, 0.01, 5, 300);
    EXPECT_NEAR(plain.statistic, weighted.statistic, 1e-12);
    // bootstrap critical value should be near the asymptotic 1.63/sqrt(n)
    EXPECT_NEAR(weighted.critical, plain.critical, 0.3 * plain.critical);
    EXPECT_NEAR(weighted.n_eff, 2000.0, 1e-9);
}

TEST(Stats, BootstrapMeanCoversTruth) {
    std::vector<double> x(4000);
    RngStream rng(3, 0);
    for (auto& v : x) v = 2.0 + rng.normal();
    const auto e = bootstrap_mean(x);
    EXPECT_TRUE(e.contains(e.value));
    EXPECT_TRUE(e.contains(2.0));
    // percentile CI width close to 2 * 1.96 * SE
    EXPECT_NEAR(e.width(), 2 * 1.96 * standard_error(x), 0.15 * e.width());
    const auto again = bootstrap_mean(x);
    EXPECT_EQ(e.lo, again.lo);
}

TEST(Stats, SparseBootstrapMatchesDense) {
    const std::size_t n = 20000;
    std::vector<double> dense(n, 0.0), nz;
    RngStream rng(4, 0);
    for (std::size_t i = 0; i < n; i += 37) {
        dense[i] = 1.0 + rng.uniform();
        nz.push_back(dense[i]);
    }
    const auto a = bootstrap_mean(dense);
    const auto b = bootstrap_sparse_mean(nz, n);
    EXPECT_DOUBLE_EQ(a.value, b.value);
    EXPECT_NEAR(a.width(), b.width(), 0.15 * a.width());
}

TEST(Stats, ProportionInterval) {
    const auto e = bootstrap_proportion(100, 10000);
    EXPECT_DOUBLE_EQ(e.value, 0.01);
    EXPECT_NEAR(e.width(), 2 * 1.96 * std::sqrt(0.01 * 0.99 / 10000), 0.003);
    const auto zero = bootstrap_proportion(0, 100);
    EXPECT_EQ(zero.lo, 0.0);
    EXPECT_EQ(zero.hi, 0.0);
}

TEST(Stats, LinearFitRecoversLine) {
    std::vector<double> x{1, 2, 3, 4, 5}, y;
    for (double v : x) y.push_back(3.0 - 0.5 * v);
    const auto f = linear_fit(x, y);
    EXPECT_NEAR(f.slope, -0.5, 1e-14);
    EXPECT_NEAR(f.intercept, 3.0, 1e-14);
    EXPECT_NEAR(f.slope_se, 0.0, 1e-14);
}

TEST(Stats, QuantileInterpolates) {
    std::vector<double> s{0, 1, 2, 3};
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 1.0), 3.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.0), 0.0);
}

TEST(Stats, WeightedCorrelation) {
    std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8.5}, w(4, 1.0);
    const double c = weighted_correlation(x, y, w);
    // plain Pearson by hand
    const double mx = 2.5, my = 5.125;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 4; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    EXPECT_NEAR(c, sxy / std::sqrt(sxx * syy), 1e-14);
}
