#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "chaoslab/errors.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/stats.hpp"

namespace chaoslab {

/// Points with fewer than this many exceedances are flagged unresolvable.
inline constexpr std::size_t kMinExceedances = 10;

struct TailCurve {
    std::vector<double> lambda;
    std::vector<double> survival;
    std::vector<double> lambda_p;
    std::vector<double> ci_lo; // survival CI
    std::vector<double> ci_hi;
    std::vector<bool> resolvable;
    std::size_t n = 0;
};

namespace detail {

inline std::vector<double> sorted_copy(std::span<const double> x) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return s;
}

inline std::size_t exceedances(const std::vector<double>& sorted, double lambda) {
    return static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), lambda));
}

} // namespace detail

/// Empirical survival P(Y > lambda) with bootstrap CIs and the lambda P column.
inline TailCurve tail_curve(std::span<const double> totals, std::span<const double> lambdas,
                            std::uint64_t seed = stats::kBootstrapSeed) {
    if (totals.empty()) throw std::invalid_argument("tail_curve: empty ensemble");
    if (!std::is_sorted(lambdas.begin(), lambdas.end())) throw ConfigError("tail_curve: lambda grid must increase");
    const auto sorted = detail::sorted_copy(totals);
    TailCurve c;
    c.n = totals.size();
    for (double lam : lambdas) {
        const std::size_t k = detail::exceedances(sorted, lam);
        const auto ci = stats::bootstrap_proportion(k, c.n, seed);
        c.lambda.push_back(lam);
        c.survival.push_back(ci.value);
        c.lambda_p.push_back(lam * ci.value);
        c.ci_lo.push_back(ci.lo);
        c.ci_hi.push_back(ci.hi);
        c.resolvable.push_back(k >= kMinExceedances);
    }
    return c;
}

/// Lambda values at survival levels spaced geometrically from p_hi down to p_lo.
inline std::vector<double> quantile_grid(std::span<const double> totals, double p_hi, double p_lo, std::size_t points) {
    if (!(p_hi > p_lo && p_lo > 0.0 && p_hi < 1.0) || points < 2) throw ConfigError("quantile_grid: bad levels");
    const auto sorted = detail::sorted_copy(totals);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(points - 1);
        const double p = p_hi * std::pow(p_lo / p_hi, f);
        grid[i] = stats::quantile_sorted(sorted, 1.0 - p);
    }
    // ties in the sample could break strict monotonicity
    for (std::size_t i = 1; i < grid.size(); ++i) grid[i] = std::max(grid[i], grid[i - 1]);
    return grid;
}

/// Log-log regression of survival against lambda over the top p_hi .. p_lo quantiles.
inline stats::LinearFit survival_slope(std::span<const double> totals, double p_hi = 1e-2, double p_lo = 1e-4,
                                       std::size_t points = 20) {
    const auto sorted = detail::sorted_copy(totals);
    const auto grid = quantile_grid(totals, p_hi, p_lo, points);
    std::vector<double> lx;
    std::vector<double> ly;
    for (double lam : grid) {
        const std::size_t k = detail::exceedances(sorted, lam);
        if (k == 0 || !(lam > 0.0)) continue;
        lx.push_back(std::log(lam));
        ly.push_back(std::log(static_cast<double>(k) / static_cast<double>(sorted.size())));
    }
    if (lx.size() < 3) throw NumericError("survival_slope: too few resolvable points");
    return stats::linear_fit(lx, ly);
}

struct Plateau {
    double lambda_lo = 0.0;
    double lambda_hi = 0.0;
    double level = 0.0; // mean of lambda P over the decade
    double min = 0.0;
    double max = 0.0;
    double ratio() const { return max / min; }
};

/// lambda P over the top resolvable decade [lambda_max / 10, lambda_max], where
/// lambda_max is the largest lambda with at least kMinExceedances exceedances.
inline Plateau tail_plateau(std::span<const double> totals, std::size_t points = 11) {
    const auto sorted = detail::sorted_copy(totals);
    if (sorted.size() <= kMinExceedances) throw NumericError("tail_plateau: ensemble too small");
    const double top = sorted[sorted.size() - kMinExceedances - 1];
    Plateau p{top / 10.0, top};
    p.min = INFINITY;
    p.max = -INFINITY;
    double sum = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double lam = p.lambda_lo * std::pow(10.0, static_cast<double>(i) / static_cast<double>(points - 1));
        const double lp = lam * static_cast<double>(detail::exceedances(sorted, lam)) / static_cast<double>(sorted.size());
        p.min = std::min(p.min, lp);
        p.max = std::max(p.max, lp);
        sum += lp;
    }
    p.level = sum / static_cast<double>(points);
    return p;
}

// ---------------------------------------------------------------------------
// c1 from half masses

inline double c1_integrand(double m0, double m1) {
    if (!(m0 > 0.0)) throw NumericError("c1 estimator needs a positive left-half mass");
    return 2.0 / std::numbers::ln2 * m0 * std::log1p(m1 / m0);
}

inline stats::Estimate estimate_c1(std::span<const double> m0, std::span<const double> m1, bool symmetrized = false,
                                   std::uint64_t seed = stats::kBootstrapSeed) {
    if (m0.size() != m1.size() || m0.empty()) throw std::invalid_argument("estimate_c1: size mismatch");
    std::vector<double> g(m0.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = symmetrized ? 0.5 * (c1_integrand(m0[i], m1[i]) + c1_integrand(m1[i], m0[i])) : c1_integrand(m0[i], m1[i]);
    }
    return stats::bootstrap_mean(g, seed);
}

// ---------------------------------------------------------------------------
// Peyriere variables

struct PeyriereSample {
    int j = 0;
    double w_tilde = 0.0;
    double y_tilde = 0.0;
    double b_tilde = 0.0;
    double weight = 0.0; // W0 + W1; records are to be averaged with this weight
};

/// W = (1/2) e^{sqrt(2 log 2) G - log 2}, G standard normal.
inline double peyriere_factor(double g) {
    return 0.5 * std::exp(std::sqrt(2.0 * std::numbers::ln2) * g - std::numbers::ln2);
}

inline PeyriereSample peyriere_sample(RngStream& rng, std::span<const double> totals) {
    if (totals.empty()) throw std::invalid_argument("peyriere_sample: empty mass ensemble");
    const double w[2] = {peyriere_factor(rng.normal()), peyriere_factor(rng.normal())};
    const double y[2] = {totals[rng.below(totals.size())], totals[rng.below(totals.size())]};
    const double weight = w[0] + w[1];
    const int j = rng.uniform() * weight < w[0] ? 0 : 1;
    return {j, w[j], y[j], w[1 - j] * y[1 - j], weight};
}

inline std::vector<PeyriereSample> peyriere_samples(std::uint64_t seed, std::size_t n, std::span<const double> totals,
                                                    unsigned workers = 1) {
    return parallel_map_ids<PeyriereSample>(0, n, workers, [&](std::uint64_t id) {
        RngStream rng(mix_seed(seed, "peyriere"), id);
        return peyriere_sample(rng, totals);
    });
}

struct QbReport {
    std::size_t n = 0;
    stats::Estimate mean_weight;     // E (W0 + W1), expected 1
    stats::Estimate p_j0;            // weighted P(j = 0), expected 1/2
    stats::KsResult neg_log_w;       // -log W~ against N(0, 2 log 2)
    double s = 0.5;
    stats::Estimate w_moment;        // weighted mean of W~^{-s}
    double w_moment_expected = 0.0;  // e^{s^2 log 2}
    double corr = 0.0;               // weighted corr(W~, Y~)
    double corr_bound = 0.0;         // 3 / sqrt(N)
    stats::KsResult y_law;           // weighted Y~ against the plain total-mass sample

    bool ks_pass() const { return neg_log_w.pass(); }
    bool moment_pass() const { return w_moment.contains(w_moment_expected); }
    bool corr_pass() const { return std::abs(corr) < corr_bound; }
    bool y_law_pass() const { return y_law.pass(); }
};

inline QbReport check_qb(std::span<const PeyriereSample> samples, std::span<const double> totals, double s = 0.5,
                         std::uint64_t seed = stats::kBootstrapSeed) {
    if (samples.size() < 2) throw std::invalid_argument("check_qb: need samples");
    const std::size_t n = samples.size();
    std::vector<double> w(n), lw(n), wt(n), yt(n), ws(n), j0(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = samples[i].weight;
        wt[i] = samples[i].w_tilde;
        yt[i] = samples[i].y_tilde;
        lw[i] = -std::log(samples[i].w_tilde);
        ws[i] = std::pow(samples[i].w_tilde, -s);
        j0[i] = samples[i].j == 0 ? 1.0 : 0.0;
    }
    QbReport r;
    r.n = n;
    r.s = s;
    r.mean_weight = stats::bootstrap_mean(w, seed);
    r.p_j0 = stats::bootstrap_weighted_mean(j0, w, seed);
    const double sd = std::sqrt(2.0 * std::numbers::ln2);
    r.neg_log_w = stats::ks_weighted_one_sample(lw, w, [sd](double x) { return stats::normal_cdf(x / sd); }, 0.01, seed);
    r.w_moment = stats::bootstrap_weighted_mean(ws, w, seed);
    r.w_moment_expected = std::exp(s * s * std::numbers::ln2);
    r.corr = stats::weighted_correlation(wt, yt, w);
    r.corr_bound = 3.0 / std::sqrt(static_cast<double>(n));
    r.y_law = stats::ks_weighted_two_sample(yt, w, totals, 0.01, seed);
    return r;
}

// ---------------------------------------------------------------------------
// F_{alpha,beta}(x) = E[Y 1{Y in (alpha e^x, beta e^x]}]

/// Exact fixed-point tally (value * 2^52) so window sums are additive bit for bit.
using Tally = __int128;

inline Tally to_tally(double y) {
    if (!(y >= 0.0) || y >= 9.0e15) throw NumericError("tally: value out of range");
    const double whole = std::floor(y);
    const auto frac = static_cast<long long>(std::llround(std::ldexp(y - whole, 52)));
    return (static_cast<Tally>(static_cast<long long>(whole)) << 52) + frac;
}

inline double from_tally(Tally t) { return std::ldexp(static_cast<double>(t), -52); }

struct FCurve {
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<double> x;
    std::vector<double> estimate;
    std::vector<double> ci_lo;
    std::vector<double> ci_hi;
    std::vector<Tally> tally; // exact sum of Y over the window
    std::vector<bool> resolvable;
};

inline FCurve f_alpha_beta(std::span<const double> totals, double alpha, double beta, std::span<const double> xs,
                           std::uint64_t seed = stats::kBootstrapSeed) {
    if (!(alpha > 0.0 && alpha < beta)) throw ConfigError("f_alpha_beta: need 0 < alpha < beta");
    const auto sorted = detail::sorted_copy(totals);
    const double n = static_cast<double>(sorted.size());
    FCurve c;
    c.alpha = alpha;
    c.beta = beta;
    for (double x : xs) {
        const double lo = alpha * std::exp(x);
        const double hi = beta * std::exp(x);
        const auto first = std::upper_bound(sorted.begin(), sorted.end(), lo);
        const auto last = std::upper_bound(sorted.begin(), sorted.end(), hi);
        const std::span<const double> window(first, last);
        Tally t = 0;
        for (double y : window) t += to_tally(y);
        const auto ci = stats::bootstrap_sparse_mean(window, sorted.size(), seed);
        c.x.push_back(x);
        c.estimate.push_back(from_tally(t) / n);
        c.ci_lo.push_back(ci.lo);
        c.ci_hi.push_back(ci.hi);
        c.tally.push_back(t);
        c.resolvable.push_back(window.size() >= kMinExceedances);
    }
    return c;
}

// ---------------------------------------------------------------------------

struct TailModificationRow {
    double alpha = 0.0;
    double constant = 0.0; // sup over resolvable lambda of lambda P(nu([0,alpha]) > lambda) / alpha
};

/// masses[i] holds the per-replica masses of [0, alphas[i]].
inline std::vector<TailModificationRow> tail_modification_check(std::span<const double> alphas,
                                                                const std::vector<std::vector<double>>& masses,
                                                                std::span<const double> lambdas) {
    if (alphas.size() != masses.size()) throw std::invalid_argument("tail_modification_check: size mismatch");
    std::vector<TailModificationRow> rows;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        const auto sorted = detail::sorted_copy(masses[i]);
        double best = 0.0;
        for (double lam : lambdas) {
            const std::size_t k = detail::exceedances(sorted, lam);
            if (k < kMinExceedances) continue;
            best = std::max(best, lam * static_cast<double>(k) / static_cast<double>(sorted.size()) / alphas[i]);
        }
        rows.push_back({alphas[i], best});
    }
    return rows;
}

} // namespace chaoslab
