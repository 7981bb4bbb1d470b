#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "chaoslab/field_kernels.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

/// Gaussian branching random walk on the dyadic tree down to depth n.
struct BrwSample {
    unsigned depth = 0;
    // node Gaussians, level by level: level k occupies [2^k - 2, 2^{k+1} - 2)
    std::vector<double> nodes;
    // U_n at the 2^n level-n cell centers
    std::vector<double> values;

    double node(unsigned k, std::size_t index) const { return nodes[(std::size_t{1} << k) - 2 + index]; }
};

inline BrwSample sample_brw(unsigned n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("sample_brw: depth must be >= 1");
    BrwSample s{n, std::vector<double>((std::size_t{2} << n) - 2), {0.0}};
    std::size_t pos = 0;
    for (unsigned k = 1; k <= n; ++k) {
        std::vector<double> next(std::size_t{1} << k);
        for (std::size_t i = 0; i < next.size(); ++i) {
            const double v = rng.normal();
            s.nodes[pos++] = v;
            next[i] = s.values[i / 2] + v;
        }
        s.values = std::move(next);
    }
    return s;
}

/// Number of levels k in 1..n at which x and y lie in the same dyadic cell.
inline unsigned cov_brw(double x, double y, unsigned n) {
    unsigned shared = 0;
    for (unsigned k = 1; k <= n; ++k) {
        const double scale = std::ldexp(1.0, static_cast<int>(k));
        if (std::floor(x * scale) != std::floor(y * scale)) break;
        ++shared;
    }
    return shared;
}

struct ComparisonReport {
    unsigned depth = 0;
    double max_violation = -std::numeric_limits<double>::infinity(); // of cov_brw <= min(-log2|x-y|, n)
    double constant_c = -std::numeric_limits<double>::infinity();    // smallest C with log2 cov_brw <= cov_star + C log2
};

/// Checks the ancestor-count bound on all pairs of level-n cell centers and
/// fits the constant for the star-kernel comparison at t = n log 2.
inline ComparisonReport check_comparison(unsigned n) {
    if (n < 1) throw std::invalid_argument("check_comparison: depth must be >= 1");
    const std::size_t cells = std::size_t{1} << n;
    const double t = n * std::numbers::ln2;
    ComparisonReport r{n};
    for (std::size_t i = 0; i < cells; ++i) {
        const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(cells);
        for (std::size_t j = i; j < cells; ++j) {
            const double y = (static_cast<double>(j) + 0.5) / static_cast<double>(cells);
            const double c = cov_brw(x, y, n);
            const double d = std::abs(x - y);
            const double bound = d == 0.0 ? static_cast<double>(n) : std::min(-std::log2(d), static_cast<double>(n));
            r.max_violation = std::max(r.max_violation, c - bound);
            r.constant_c = std::max(r.constant_c, c - cov_star(x, y, t) / std::numbers::ln2);
        }
    }
    return r;
}

/// sqrt(n) sum_sigma 2^{-n} e^{sqrt(2 log 2) U_n - n log 2}.
inline double cascade_total(const BrwSample& s) {
    const double a = std::sqrt(2.0 * std::numbers::ln2);
    const double n = s.depth;
    const double w = std::ldexp(1.0, -static_cast<int>(s.depth));
    double sum = 0.0;
    for (double u : s.values) sum += w * std::exp(a * u - n * std::numbers::ln2);
    return std::sqrt(n) * sum;
}

inline double critical_cascade_total(unsigned n, RngStream& rng) { return cascade_total(sample_brw(n, rng)); }

} // namespace chaoslab
