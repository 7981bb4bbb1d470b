#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chaoslab/cascade.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/field_kernels.hpp"
#include "chaoslab/gaussian_sampler.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/stats.hpp"

namespace chaoslab {

enum class Verdict { Holds, Violated, Inconclusive };

inline std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::Holds: return "holds-within-CI";
    case Verdict::Violated: return "violated";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

/// Claimed ordering left >= right.
struct InequalityReport {
    std::string name;
    stats::Estimate left;
    stats::Estimate right;
    stats::Estimate difference; // paired left - right when available
    Verdict verdict = Verdict::Inconclusive;
    std::size_t n = 0;
};

// "violated" needs the two marginal CIs disjoint in the wrong order; a paired
// difference CI wholly below 0 with overlapping marginals is only
// "inconclusive".
inline Verdict judge(const stats::Estimate& left, const stats::Estimate& right, const stats::Estimate* paired) {
    if (left.hi < right.lo) return Verdict::Violated;
    if (paired && paired->hi < 0.0) return Verdict::Inconclusive;
    return Verdict::Holds;
}

// ---------------------------------------------------------------------------
// Kahane

/// Compares E(sum_i w_i e^{a_i - A_ii/2})^h for two Gaussian vectors with
/// kernels A <= B entrywise, using the same normals for both (L_A z, L_B z).
/// For concave x^h the less correlated kernel A gives the larger value.
inline InequalityReport kahane_test(std::string name, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double h,
                                    std::size_t n, std::uint64_t seed, unsigned workers = 1) {
    if (A.rows() != B.rows() || A.rows() != A.cols() || B.rows() != B.cols()) throw ConfigError("kahane: shape mismatch");
    if (!(h > 0.0 && h < 1.0)) throw ConfigError("kahane: h must lie in (0,1)");
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            if (A(i, j) > B(i, j)) {
                throw ConfigError("kahane: kernel A exceeds kernel B at entry (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
            }
        }
    }
    const CholeskyFactor la(A, 1e-12 * (1.0 + A.diagonal().maxCoeff()));
    const CholeskyFactor lb(B, 1e-12 * (1.0 + B.diagonal().maxCoeff()));
    const auto m = A.rows();
    const double w = 1.0 / static_cast<double>(m);
    struct Pair {
        double a = 0.0;
        double b = 0.0;
    };
    const auto pairs = parallel_map_ids<Pair>(0, n, workers, [&](std::uint64_t id) {
        RngStream rng(mix_seed(seed, "kahane"), id);
        Eigen::VectorXd z(m);
        for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
        const Eigen::VectorXd xa = la.apply(z);
        const Eigen::VectorXd xb = lb.apply(z);
        double sa = 0.0;
        double sb = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            sa += w * std::exp(xa[i] - 0.5 * A(i, i));
            sb += w * std::exp(xb[i] - 0.5 * B(i, i));
        }
        return Pair{std::pow(sa, h), std::pow(sb, h)};
    });
    std::vector<double> ga(n), gb(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        ga[i] = pairs[i].a;
        gb[i] = pairs[i].b;
        d[i] = ga[i] - gb[i];
    }
    InequalityReport r{std::move(name), stats::bootstrap_mean(ga), stats::bootstrap_mean(gb), stats::bootstrap_mean(d)};
    r.n = n;
    r.verdict = judge(r.left, r.right, &r.difference);
    return r;
}

inline Eigen::MatrixXd kernel_matrix(std::span<const double> pts, const std::function<double(double, double)>& k) {
    const auto m = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd out(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) out(i, j) = k(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
    }
    return out;
}

struct KernelPair {
    std::string name;
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
};

/// Identical star kernels on m cell centers at the coupled horizon.
inline KernelPair kahane_pair_identical(std::size_t m = 16) {
    const auto spec = FieldSpec::coupled(FieldKind::StarY, m);
    const auto cov = build_covariance(spec);
    return {"identical", cov, cov};
}

/// Product fields over I1 x I2 with I1 = [0,1/4], I2 = [3/4,1], `per_side` points
/// each: sqrt2 (X(x) + X~(y)) against sqrt2 (X(x) + X(y)).
inline KernelPair kahane_pair_disjoint(std::size_t per_side = 4) {
    const double t = std::log(16.0);
    std::vector<std::pair<double, double>> idx;
    for (std::size_t i = 0; i < per_side; ++i) {
        for (std::size_t j = 0; j < per_side; ++j) {
            const double x = 0.25 * (static_cast<double>(i) + 0.5) / static_cast<double>(per_side);
            const double y = 0.75 + 0.25 * (static_cast<double>(j) + 0.5) / static_cast<double>(per_side);
            idx.emplace_back(x, y);
        }
    }
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd a(m, m), b(m, m);
    for (Eigen::Index p = 0; p < m; ++p) {
        for (Eigen::Index q = 0; q < m; ++q) {
            const auto [x, y] = idx[static_cast<std::size_t>(p)];
            const auto [xp, yp] = idx[static_cast<std::size_t>(q)];
            a(p, q) = 2.0 * (cov_exact(x, xp, t) + cov_exact(y, yp, t));
            b(p, q) = a(p, q) + 2.0 * (cov_exact(x, yp, t) + cov_exact(y, xp, t));
        }
    }
    return {"disjoint-intervals", a, b};
}

/// 2 log2 cov_brw against 2 cov_star + 2 C log 2 on the level-n cell centers, t = n log 2.
inline KernelPair kahane_pair_brw(unsigned n = 6) {
    const double c = check_comparison(n).constant_c;
    const double t = n * std::numbers::ln2;
    std::vector<double> pts(std::size_t{1} << n);
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(pts.size());
    const auto a = kernel_matrix(pts, [n](double x, double y) { return 2.0 * std::numbers::ln2 * cov_brw(x, y, n); });
    const auto b = kernel_matrix(pts, [t, c](double x, double y) {
        return 2.0 * cov_star(x, y, t) + 2.0 * c * std::numbers::ln2;
    });
    return {"brw-vs-star", a, b};
}

// ---------------------------------------------------------------------------
// Tails of weighted sums of dependent copies

struct SumTailReport {
    std::size_t copies = 0;
    std::size_t replicas = 0;
    double tail_constant = 1.0; // A in P(X > lambda) <= A / lambda
    double c_empirical = 0.0;   // sup_lambda lambda P(S > lambda) / (A log(N+1) sum a)
    double argmax_lambda = 0.0;
};

using CopyGenerator = std::function<void(RngStream&, std::span<double>)>;

/// Independent copies with P(X > lambda) = 1/lambda for lambda >= 1.
inline CopyGenerator pareto_copies() {
    return [](RngStream& rng, std::span<double> out) {
        for (auto& v : out) v = 1.0 / (1.0 - rng.uniform());
    };
}

/// Shifted copies X_j(w) = X_0(w + j/N mod 1) of X_0 = N/k on [(k-1)/N, k/N).
inline CopyGenerator torus_copies() {
    return [](RngStream& rng, std::span<double> out) {
        const std::size_t n = out.size();
        const std::uint64_t cell = rng.below(n);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t k = (cell + j + 1) % n + 1; // cell index of w + j/N, 1-based
            out[j] = static_cast<double>(n) / static_cast<double>(k);
        }
    };
}

inline SumTailReport sum_tail_test(std::span<const double> weights, const CopyGenerator& gen, std::span<const double> lambdas,
                                   std::size_t replicas, std::uint64_t seed, double tail_constant = 1.0,
                                   unsigned workers = 1) {
    if (weights.empty()) throw ConfigError("sum_tail_test: need at least one weight");
    const double total_weight = std::accumulate(weights.begin(), weights.end(), 0.0);
    auto sums = parallel_map_ids<double>(0, replicas, workers, [&](std::uint64_t id) {
        RngStream rng(mix_seed(seed, "sum-tail"), id);
        std::vector<double> x(weights.size());
        gen(rng, x);
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += weights[j] * x[j];
        return s;
    });
    std::sort(sums.begin(), sums.end());
    SumTailReport r{weights.size(), replicas, tail_constant};
    const double scale = tail_constant * std::log(static_cast<double>(weights.size()) + 1.0) * total_weight;
    for (double lam : lambdas) {
        const auto k = static_cast<double>(sums.end() - std::upper_bound(sums.begin(), sums.end(), lam));
        const double c = lam * k / static_cast<double>(replicas) / scale;
        if (c > r.c_empirical) {
            r.c_empirical = c;
            r.argmax_lambda = lam;
        }
    }
    return r;
}

struct TorusReport {
    std::size_t n = 0;
    bool tail_bound_exact = false;   // P(X0 > lambda) < 1/lambda at every breakpoint and between
    bool every_cell_full_cycle = false; // each w sees every k = 1..N once across the N shifts
    double harmonic = 0.0;           // common value of the average, H_N
    std::int64_t harmonic_num = 0;   // H_N as a reduced fraction when it fits in 64 bits
    std::int64_t harmonic_den = 0;
    double log_n = 0.0;
    bool holds() const { return tail_bound_exact && every_cell_full_cycle && harmonic >= log_n; }
};

inline TorusReport torus_counterexample(std::size_t n) {
    if (n < 2) throw ConfigError("torus_counterexample: N must be >= 2");
    TorusReport r{n};
    // On (N/(k+1), N/k) the survival is k/N and lambda k / N < 1; at lambda = N/k it is (k-1)/N < k/N.
    r.tail_bound_exact = true;
    for (std::size_t k = 1; k <= n; ++k) {
        // compare (k-1)/N < 1/lambda = k/N by cross-multiplying integers
        if (!((k - 1) * n < k * n)) r.tail_bound_exact = false;
    }
    r.every_cell_full_cycle = true;
    std::vector<char> seen(n + 1);
    for (std::size_t cell = 0; cell < n && r.every_cell_full_cycle; ++cell) {
        std::fill(seen.begin(), seen.end(), 0);
        for (std::size_t j = 1; j <= n; ++j) {
            const std::size_t k = (cell + j) % n + 1;
            if (seen[k]) r.every_cell_full_cycle = false;
            seen[k] = 1;
        }
    }
    long double h = 0.0L;
    for (std::size_t k = n; k >= 1; --k) h += 1.0L / static_cast<long double>(k);
    r.harmonic = static_cast<double>(h);
    r.log_n = std::log(static_cast<double>(n));
    // exact fraction while the denominator stays below 2^62 (N up to about 40)
    __int128 num = 0;
    __int128 den = 1;
    bool fits = true;
    for (std::size_t k = 1; k <= n && fits; ++k) {
        num = num * static_cast<__int128>(k) + den;
        den *= static_cast<__int128>(k);
        __int128 a = num;
        __int128 b = den;
        while (b != 0) {
            const __int128 tmp = a % b;
            a = b;
            b = tmp;
        }
        num /= a;
        den /= a;
        if (den > (__int128{1} << 62)) fits = false;
    }
    if (fits) {
        r.harmonic_num = static_cast<std::int64_t>(num);
        r.harmonic_den = static_cast<std::int64_t>(den);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Borell-TIS

struct BorellTisReport {
    double interval = 0.0;       // |I|
    double increment_const = 0.0; // L with E|Y(x)-Y(y)|^2 <= L|x-y| on I
    double epsilon = 1.0;
    double threshold_slope = 0.0; // -1 / ((2 + eps) |I| L)
    stats::LinearFit fit;         // log P(sup > s) against s^2
    double c_eps = 0.0;           // smallest constant making the bound hold on the grid
    double expected_sup = 0.0;    // reported only
    bool dominates_pointwise = false;
    std::vector<double> s;
    std::vector<double> p_sup;
    std::vector<double> p_point;
    Verdict verdict = Verdict::Inconclusive;
    std::size_t n = 0;
};

/// Tail of sup over I = [0, len] of the pinned field Y(x) - Y(x0), x0 the first
/// grid point, on a star-Y grid.
inline BorellTisReport borell_tis_test(const FieldSpec& spec, double len, double epsilon, std::size_t n,
                                       std::uint64_t seed, std::size_t s_points = 15, unsigned workers = 1) {
    spec.validate();
    if (!(len > 0.0 && len <= 1.0) || !(epsilon > 0.0)) throw ConfigError("borell_tis: bad interval or epsilon");
    const FieldSampler sampler(spec);
    std::size_t last = 0;
    while (last + 1 < spec.m && spec.point(last + 1) <= len) ++last;
    BorellTisReport r;
    r.interval = len;
    r.epsilon = epsilon;
    r.n = n;
    const double var = field_variance(spec.kind, spec.t);
    for (std::size_t lag = 1; lag <= last; ++lag) {
        const double d = static_cast<double>(lag) * spec.spacing();
        r.increment_const = std::max(r.increment_const, 2.0 * (var - kernel_at_distance(spec.kind, d, spec.t)) / d);
    }
    r.threshold_slope = -1.0 / ((2.0 + epsilon) * len * r.increment_const);

    struct Draw {
        double sup = 0.0;
        double end = 0.0;
    };
    const auto draws = parallel_map_ids<Draw>(0, n, workers, [&](std::uint64_t id) {
        RngStream rng(mix_seed(seed, "borell-tis"), id);
        std::vector<double> v(spec.m);
        sampler.sample_into(rng, v);
        double sup = 0.0;
        for (std::size_t i = 0; i <= last; ++i) sup = std::max(sup, v[i] - v[0]);
        return Draw{sup, v[last] - v[0]};
    });
    std::vector<double> sups(n), ends(n);
    for (std::size_t i = 0; i < n; ++i) {
        sups[i] = draws[i].sup;
        ends[i] = draws[i].end;
    }
    r.expected_sup = stats::mean(sups);
    std::sort(sups.begin(), sups.end());
    std::sort(ends.begin(), ends.end());
    // s grid between the median and the 99.9% quantile of the sup
    const double s_lo = stats::quantile_sorted(sups, 0.5);
    const double s_hi = stats::quantile_sorted(sups, 0.999);
    std::vector<double> xs, ys;
    r.dominates_pointwise = true;
    for (std::size_t i = 0; i < s_points; ++i) {
        const double s = s_lo + (s_hi - s_lo) * static_cast<double>(i) / static_cast<double>(s_points - 1);
        const auto ks = static_cast<double>(sups.end() - std::upper_bound(sups.begin(), sups.end(), s));
        const auto ke = static_cast<double>(ends.end() - std::upper_bound(ends.begin(), ends.end(), s));
        const double ps = ks / static_cast<double>(n);
        const double pe = ke / static_cast<double>(n);
        r.s.push_back(s);
        r.p_sup.push_back(ps);
        r.p_point.push_back(pe);
        if (ps < pe) r.dominates_pointwise = false;
        if (ks > 0) {
            xs.push_back(s * s);
            ys.push_back(std::log(ps));
            r.c_eps = std::max(r.c_eps, ps * std::exp(-r.threshold_slope * s * s));
        }
    }
    if (xs.size() < 3) throw NumericError("borell_tis: too few resolvable tail points");
    r.fit = stats::linear_fit(xs, ys);
    // consistent with the bound when the slope does not exceed the threshold beyond 1.96 SE
    r.verdict = r.fit.slope - 1.96 * r.fit.slope_se <= r.threshold_slope ? Verdict::Holds : Verdict::Violated;
    return r;
}

// ---------------------------------------------------------------------------

/// Mean of (M0 M1)^h with a bootstrap CI.
inline stats::Estimate mixed_moment(std::span<const double> m0, std::span<const double> m1, double h,
                                    std::uint64_t seed = stats::kBootstrapSeed) {
    if (m0.size() != m1.size() || m0.empty()) throw std::invalid_argument("mixed_moment: size mismatch");
    if (h == 0.0) return {1.0, 1.0, 1.0};
    std::vector<double> v(m0.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(m0[i] * m1[i], h);
    return stats::bootstrap_mean(v, seed);
}

} // namespace chaoslab
