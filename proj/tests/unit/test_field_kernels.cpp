#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "chaoslab/field_kernels.hpp"

using namespace chaoslab;

namespace {

// Independent oracle: the star kernel is the hyperbolic area shared by two
// cones of half-width y/2 between heights e^{-t} and 1, i.e.
// int max(0, y - d) / y^2 dy; the exact field adds the part above height 1,
// which contributes 1 - d. Composite Simpson in log y.
double cone_overlap(double d, double t) {
    const double lo = std::max(std::exp(-t), d);
    if (lo >= 1.0) return 0.0;
    const int n = 20000;
    const double a = std::log(lo);
    const double h = -a / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double u = a + i * h;
        const double y = std::exp(u);
        const double f = (y - d) / (y * y) * y; // dy = y du
        s += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return s * h / 3.0;
}

} // namespace

TEST(FieldKernels, StarKernelMatchesConeArea) {
    for (double t : {0.5, 2.0, 5.0}) {
        for (double d : {0.0, 1e-3, 0.01, 0.1, 0.3, 0.7, 0.999}) {
            EXPECT_NEAR(cov_star(0.2, 0.2 + d, t), cone_overlap(d, t), 1e-9) << "t=" << t << " d=" << d;
        }
    }
}

TEST(FieldKernels, ExactKernelAddsUnitScaleCone) {
    for (double t : {0.5, 3.0}) {
        for (double d : {0.0, 0.05, 0.4, 0.9}) {
            EXPECT_NEAR(cov_exact(0.0, d, t), cone_overlap(d, t) + (1.0 - d), 1e-9);
        }
    }
}

TEST(FieldKernels, DiagonalIsVariance) {
    EXPECT_DOUBLE_EQ(cov_exact(0.3, 0.3, 4.0), 5.0);
    EXPECT_DOUBLE_EQ(cov_star(0.3, 0.3, 4.0), 4.0);
    EXPECT_DOUBLE_EQ(field_variance(FieldKind::ExactX, 4.0), 5.0);
    EXPECT_DOUBLE_EQ(field_variance(FieldKind::StarY, 4.0), 4.0);
}

TEST(FieldKernels, BranchesAreContinuous) {
    for (double t : {0.1, 1.0, 7.0}) {
        const double b = std::exp(-t);
        EXPECT_NEAR(cov_exact(0, b * (1 - 1e-12), t), cov_exact(0, b * (1 + 1e-12), t), 1e-10);
        EXPECT_NEAR(cov_star(0, b * (1 - 1e-12), t), cov_star(0, b * (1 + 1e-12), t), 1e-10);
    }
    EXPECT_NEAR(cov_exact(0, 1.0, 3.0), 0.0, 1e-15);
    EXPECT_EQ(cov_exact(0, 1.5, 3.0), 0.0);
    EXPECT_NEAR(cov_star(0, 1.0, 3.0), 0.0, 1e-15);
}

TEST(FieldKernels, Symmetric) {
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(g), y = u(g), t = 5 * u(g);
        EXPECT_EQ(cov_exact(x, y, t), cov_exact(y, x, t));
        EXPECT_EQ(cov_star(x, y, t), cov_star(y, x, t));
    }
}

TEST(FieldKernels, ScaleIdentityHolds) {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<std::pair<double, double>> pairs;
    const double len = 0.25;
    for (int i = 0; i < 2000; ++i) pairs.emplace_back(len * u(g), len * u(g));
    EXPECT_LE(verify_scale_kernel(len, 6.0, pairs), 1e-12);
}

TEST(FieldKernels, ScaleIdentityRejectsBadInput) {
    std::vector<std::pair<double, double>> pairs{{0.1, 0.6}};
    EXPECT_THROW(verify_scale_kernel(0.5, 3.0, pairs), std::invalid_argument);
    std::vector<std::pair<double, double>> ok{{0.1, 0.2}};
    EXPECT_THROW(verify_scale_kernel(0.5, 0.1, ok), std::invalid_argument);
    EXPECT_THROW(cone_variance(0.0), std::invalid_argument);
    EXPECT_THROW(cone_variance(1.5), std::invalid_argument);
    EXPECT_DOUBLE_EQ(cone_variance(1.0), 0.0);
}

TEST(FieldKernels, SpecValidation) {
    EXPECT_THROW((FieldSpec{FieldKind::ExactX, 1.0, 3}.validate()), ConfigError);
    EXPECT_THROW((FieldSpec{FieldKind::ExactX, -1.0, 4}.validate()), ConfigError);
    EXPECT_NO_THROW((FieldSpec{FieldKind::ExactX, 0.0, 1}.validate()));
    const auto s = FieldSpec::coupled(FieldKind::StarY, 1024);
    EXPECT_NEAR(std::exp(-s.t), s.spacing(), 1e-15);
    EXPECT_DOUBLE_EQ(s.point(0), 0.5 / 1024);
    EXPECT_EQ(field_kind_from_string("star-Y"), FieldKind::StarY);
    EXPECT_THROW(field_kind_from_string("X"), ConfigError);
}
