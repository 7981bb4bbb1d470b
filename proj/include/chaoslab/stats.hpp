#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "chaoslab/rng.hpp"

namespace chaoslab::stats {

inline constexpr std::uint64_t kBootstrapSeed = 0xb0075eedULL;
inline constexpr int kBootstrapResamples = 1000;

struct Estimate {
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean of empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double mu = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - mu) * (v - mu);
    return s / static_cast<double>(x.size() - 1);
}

inline double standard_error(std::span<const double> x) {
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

/// Linear-interpolation quantile of an already sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= sorted.size()) return sorted.back();
    const double f = pos - static_cast<double>(i);
    return sorted[i] * (1.0 - f) + sorted[i + 1] * f;
}

inline double quantile(std::vector<double> x, double q) {
    std::sort(x.begin(), x.end());
    return quantile_sorted(x, q);
}

namespace detail {

// Multiply-shift index draw; fast and deterministic for a given engine state.
inline std::size_t draw_index(std::mt19937_64& eng, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(eng()) * n) >> 64U);
}

inline Estimate percentile_interval(double point, std::vector<double>& reps, double level) {
    std::sort(reps.begin(), reps.end());
    const double a = 0.5 * (1.0 - level);
    return {point, quantile_sorted(reps, a), quantile_sorted(reps, 1.0 - a)};
}

} // namespace detail

/// Percentile bootstrap CI for the sample mean.
inline Estimate bootstrap_mean(std::span<const double> x, std::uint64_t seed = kBootstrapSeed,
                               int resamples = kBootstrapResamples, double level = 0.95) {
    const double point = mean(x);
    RngStream rng(seed, 0);
    std::vector<double> reps(static_cast<std::size_t>(resamples));
    for (auto& r : reps) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += x[detail::draw_index(rng.engine(), x.size())];
        r = s / static_cast<double>(x.size());
    }
    return detail::percentile_interval(point, reps, level);
}

/// Percentile bootstrap CI for the self-normalized weighted mean sum(w x) / sum(w).
inline Estimate bootstrap_weighted_mean(std::span<const double> x, std::span<const double> w,
                                        std::uint64_t seed = kBootstrapSeed, int resamples = kBootstrapResamples,
                                        double level = 0.95) {
    if (x.size() != w.size() || x.empty()) throw std::invalid_argument("weighted mean: size mismatch or empty");
    double sw = 0.0;
    double swx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
    }
    RngStream rng(seed, 0);
    std::vector<double> reps(static_cast<std::size_t>(resamples));
    for (auto& r : reps) {
        double a = 0.0;
        double b = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const std::size_t k = detail::draw_index(rng.engine(), x.size());
            a += w[k] * x[k];
            b += w[k];
        }
        r = a / b;
    }
    return detail::percentile_interval(swx / sw, reps, level);
}

/// Percentile bootstrap CI for an arbitrary statistic of one sample.
inline Estimate bootstrap(std::span<const double> x, const std::function<double(std::span<const double>)>& stat,
                          std::uint64_t seed = kBootstrapSeed, int resamples = kBootstrapResamples,
                          double level = 0.95) {
    const double point = stat(x);
    RngStream rng(seed, 0);
    std::vector<double> buf(x.size());
    std::vector<double> reps(static_cast<std::size_t>(resamples));
    for (auto& r : reps) {
        for (auto& b : buf) b = x[detail::draw_index(rng.engine(), x.size())];
        r = stat(buf);
    }
    return detail::percentile_interval(point, reps, level);
}

/// Bootstrap CI for a proportion k/n; resampling indicators is a Binomial(n, k/n) draw.
inline Estimate bootstrap_proportion(std::size_t k, std::size_t n, std::uint64_t seed = kBootstrapSeed,
                                     int resamples = kBootstrapResamples, double level = 0.95) {
    if (n == 0) throw std::invalid_argument("proportion of empty sample");
    const double p = static_cast<double>(k) / static_cast<double>(n);
    RngStream rng(seed, 0);
    std::binomial_distribution<std::size_t> binom(n, p);
    std::vector<double> reps(static_cast<std::size_t>(resamples));
    for (auto& r : reps) r = static_cast<double>(binom(rng.engine())) / static_cast<double>(n);
    return detail::percentile_interval(p, reps, level);
}

/// Bootstrap of the mean of a length-n vector that is zero except for `nonzero`.
/// A resample hits the nonzero set Binomial(n, k/n) times, each hit uniform on it,
/// which is the same law as plain resampling at a fraction of the cost.
inline Estimate bootstrap_sparse_mean(std::span<const double> nonzero, std::size_t n,
                                      std::uint64_t seed = kBootstrapSeed, int resamples = kBootstrapResamples,
                                      double level = 0.95) {
    if (n == 0 || nonzero.size() > n) throw std::invalid_argument("sparse mean: bad sizes");
    const double point = std::accumulate(nonzero.begin(), nonzero.end(), 0.0) / static_cast<double>(n);
    if (nonzero.empty()) return {0.0, 0.0, 0.0};
    RngStream rng(seed, 0);
    std::binomial_distribution<std::size_t> binom(n, static_cast<double>(nonzero.size()) / static_cast<double>(n));
    std::vector<double> reps(static_cast<std::size_t>(resamples));
    for (auto& r : reps) {
        const std::size_t hits = binom(rng.engine());
        double s = 0.0;
        for (std::size_t i = 0; i < hits; ++i) s += nonzero[detail::draw_index(rng.engine(), nonzero.size())];
        r = s / static_cast<double>(n);
    }
    return detail::percentile_interval(point, reps, level);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

/// Asymptotic critical coefficient c(alpha) = sqrt(-log(alpha/2) / 2); c(0.01) ~ 1.628.
inline double ks_coefficient(double alpha) { return std::sqrt(-0.5 * std::log(alpha / 2.0)); }

struct KsResult {
    double statistic = 0.0;
    double critical = 0.0;
    double n_eff = 0.0;
    bool pass() const { return statistic < critical; }
};

inline KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf,
                              double alpha = 0.01) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, ks_coefficient(alpha) / std::sqrt(n), n};
}

inline double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha = 0.01) {
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double d = ks_distance(std::move(a), std::move(b));
    const double n_eff = na * nb / (na + nb);
    return {d, ks_coefficient(alpha) / std::sqrt(n_eff), n_eff};
}

namespace detail {

struct WeightedSorted {
    std::vector<double> x;
    std::vector<double> w;
};

inline WeightedSorted sort_weighted(std::span<const double> x, std::span<const double> w) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    WeightedSorted s{std::vector<double>(x.size()), std::vector<double>(x.size())};
    for (std::size_t i = 0; i < idx.size(); ++i) {
        s.x[i] = x[idx[i]];
        s.w[i] = w[idx[i]];
    }
    return s;
}

inline double effective_size(std::span<const double> w) {
    double s = 0.0;
    double s2 = 0.0;
    for (double v : w) {
        s += v;
        s2 += v * v;
    }
    return s * s / s2;
}

// Weighted ECDF (right-continuous, ties grouped) evaluated after each distinct value.
inline std::vector<double> weighted_ecdf(const WeightedSorted& s, std::span<const double> counts) {
    std::vector<double> f(s.x.size());
    double acc = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < s.x.size(); ++i) total += counts[i] * s.w[i];
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        acc += counts[i] * s.w[i];
        f[i] = acc / total;
    }
    // ties: every member of a tie group takes the group's final value
    for (std::size_t i = s.x.size(); i-- > 1;) {
        if (s.x[i - 1] == s.x[i]) f[i - 1] = f[i];
    }
    return f;
}

} // namespace detail

/// KS test of a weighted sample against a continuous CDF.
///
/// Importance weights distort the null distribution of sqrt(n) D, so the
/// critical value is the (1 - alpha) quantile of the bootstrap statistic
/// sup |F*_w - F_w| over multinomial resamples of the records.
inline KsResult ks_weighted_one_sample(std::span<const double> x, std::span<const double> w,
                                       const std::function<double(double)>& cdf, double alpha = 0.01,
                                       std::uint64_t seed = kBootstrapSeed, int resamples = kBootstrapResamples) {
    const auto s = detail::sort_weighted(x, w);
    const std::vector<double> ones(s.x.size(), 1.0);
    const auto f = detail::weighted_ecdf(s, ones);
    double d = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double g = cdf(s.x[i]);
        d = std::max({d, std::abs(f[i] - g), std::abs(g - prev)});
        prev = f[i];
    }
    RngStream rng(seed, 0);
    std::vector<double> counts(s.x.size());
    std::vector<double> reps(static_cast<std::size_t>(resamples));
    for (auto& r : reps) {
        std::fill(counts.begin(), counts.end(), 0.0);
        for (std::size_t i = 0; i < counts.size(); ++i) counts[detail::draw_index(rng.engine(), counts.size())] += 1.0;
        const auto fb = detail::weighted_ecdf(s, counts);
        double db = 0.0;
        for (std::size_t i = 0; i < fb.size(); ++i) db = std::max(db, std::abs(fb[i] - f[i]));
        r = db;
    }
    std::sort(reps.begin(), reps.end());
    return {d, quantile_sorted(reps, 1.0 - alpha), detail::effective_size(w)};
}

/// Two-sample KS where sample `a` carries weights and `b` is a plain sample;
/// bootstrap critical value from independent resampling of both.
inline KsResult ks_weighted_two_sample(std::span<const double> a, std::span<const double> wa,
                                       std::span<const double> b, double alpha = 0.01,
                                       std::uint64_t seed = kBootstrapSeed, int resamples = 300) {
    const auto sa = detail::sort_weighted(a, wa);
    const std::vector<double> wb(b.size(), 1.0);
    const auto sb = detail::sort_weighted(b, wb);
    auto distance = [&](std::span<const double> ca, std::span<const double> cb, std::span<const double> fa0,
                        std::span<const double> fb0) {
        const auto fa = detail::weighted_ecdf(sa, ca);
        const auto fb = detail::weighted_ecdf(sb, cb);
        // Walk the merged support; compare (F_a - F_b) against the reference difference.
        double d = 0.0;
        std::size_t i = 0;
        std::size_t j = 0;
        double va = 0.0;
        double vb = 0.0;
        double ra = 0.0;
        double rb = 0.0;
        while (i < sa.x.size() || j < sb.x.size()) {
            const double xa = i < sa.x.size() ? sa.x[i] : INFINITY;
            const double xb = j < sb.x.size() ? sb.x[j] : INFINITY;
            const double v = std::min(xa, xb);
            while (i < sa.x.size() && sa.x[i] == v) {
                va = fa[i];
                if (!fa0.empty()) ra = fa0[i];
                ++i;
            }
            while (j < sb.x.size() && sb.x[j] == v) {
                vb = fb[j];
                if (!fb0.empty()) rb = fb0[j];
                ++j;
            }
            d = std::max(d, std::abs((va - vb) - (ra - rb)));
        }
        return d;
    };
    const std::vector<double> ones_a(sa.x.size(), 1.0);
    const std::vector<double> ones_b(sb.x.size(), 1.0);
    const double d = distance(ones_a, ones_b, {}, {});
    const auto fa0 = detail::weighted_ecdf(sa, ones_a);
    const auto fb0 = detail::weighted_ecdf(sb, ones_b);
    RngStream rng(seed, 0);
    std::vector<double> ca(sa.x.size());
    std::vector<double> cb(sb.x.size());
    std::vector<double> reps(static_cast<std::size_t>(resamples));
    for (auto& r : reps) {
        std::fill(ca.begin(), ca.end(), 0.0);
        std::fill(cb.begin(), cb.end(), 0.0);
        for (std::size_t i = 0; i < ca.size(); ++i) ca[detail::draw_index(rng.engine(), ca.size())] += 1.0;
        for (std::size_t i = 0; i < cb.size(); ++i) cb[detail::draw_index(rng.engine(), cb.size())] += 1.0;
        r = distance(ca, cb, fa0, fb0);
    }
    std::sort(reps.begin(), reps.end());
    const double n_eff_a = detail::effective_size(wa);
    const double nb = static_cast<double>(b.size());
    return {d, quantile_sorted(reps, 1.0 - alpha), n_eff_a * nb / (n_eff_a + nb)};
}

// ---------------------------------------------------------------------------

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

/// Ordinary least squares y = intercept + slope x with the classical slope standard error.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit needs >= 2 paired points");
    const double n = static_cast<double>(x.size());
    const double mx = mean(x);
    const double my = mean(y);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

inline double weighted_correlation(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    double sw = 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        mx += w[i] * x[i];
        my += w[i] * y[i];
    }
    mx /= sw;
    my /= sw;
    double cxy = 0.0;
    double cxx = 0.0;
    double cyy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cxy += w[i] * (x[i] - mx) * (y[i] - my);
        cxx += w[i] * (x[i] - mx) * (x[i] - mx);
        cyy += w[i] * (y[i] - my) * (y[i] - my);
    }
    return cxy / std::sqrt(cxx * cyy);
}

} // namespace chaoslab::stats
