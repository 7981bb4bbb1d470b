#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/chaos_measure.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/stats.hpp"

namespace chaoslab {

enum class Parity { All, Even, Odd };

/// Largest mass in the level's family; even/odd select by interval index.
inline double max_dyadic(std::span<const double> level_masses, Parity parity = Parity::All) {
    if (level_masses.empty()) throw std::invalid_argument("max_dyadic: no masses");
    if (parity != Parity::All && level_masses.size() < 2) throw std::invalid_argument("max_dyadic: parity needs level >= 1");
    double best = -INFINITY;
    const std::size_t start = parity == Parity::Odd ? 1 : 0;
    const std::size_t step = parity == Parity::All ? 1 : 2;
    for (std::size_t i = start; i < level_masses.size(); i += step) best = std::max(best, level_masses[i]);
    return best;
}

inline double max_dyadic(const DyadicMasses& dm, Parity parity = Parity::All) { return max_dyadic(dm.masses, parity); }

/// f_alpha(n) = exp(-sqrt(6 log 2) sqrt(n (log n + alpha log log n))).
inline double gauge(unsigned n, double alpha) {
    if (n < 3) throw ConfigError("gauge: n must be >= 3");
    const double ln = std::log(static_cast<double>(n));
    return std::exp(-std::sqrt(6.0 * std::numbers::ln2) * std::sqrt(n * (ln + alpha * std::log(ln))));
}

struct GaugeExponents {
    double gamma = 0.0;
    double lambda = 0.0;
    double discriminant = 0.0;
    double residual = 0.0; // log2 lambda^2 gamma^2 - lambda gamma^2 - c at the root
};

/// Smallest gamma for which log2 lambda^2 gamma^2 - lambda gamma^2 - c = 0 has a
/// real root in lambda, and that (double) root. c = -3/2 by default.
inline GaugeExponents gauge_exponents(double c = -1.5) {
    if (!(c < 0.0)) throw ConfigError("gauge_exponents: c must be negative");
    const double l2 = std::numbers::ln2;
    GaugeExponents g;
    // discriminant gamma^4 + 4 c log2 gamma^2 vanishes at gamma^2 = -4 c log 2
    const double g2 = -4.0 * c * l2;
    g.gamma = std::sqrt(g2);
    const double qa = l2 * g2;
    const double qb = -g2;
    const double qc = -c;
    g.discriminant = qb * qb - 4.0 * qa * qc;
    g.lambda = -qb / (2.0 * qa);
    g.residual = qa * g.lambda * g.lambda + qb * g.lambda + qc;
    return g;
}

// ---------------------------------------------------------------------------
// Per-level ensembles

struct ModulusRecord {
    std::uint64_t replica_id = 0;
    double total = 0.0;
    double max_all = 0.0;
    double max_even = 0.0;
    double enf = 0.0; // sum of level-n masses that are <= f_alpha(n)
};

/// Star-Y grid for statistics at level n: m = 2^{n+4}, t = log m.
inline FieldSpec modulus_field(unsigned n) { return FieldSpec::coupled(FieldKind::StarY, std::size_t{1} << (n + 4)); }

inline ModulusRecord modulus_record(std::uint64_t id, const DyadicPyramid& p, unsigned n, double alpha) {
    const auto lvl = p.level(n);
    const double f = gauge(n, alpha);
    double enf = 0.0;
    for (double v : lvl) {
        if (v <= f) enf += v;
    }
    return {id, p.total(), max_dyadic(lvl), max_dyadic(lvl, Parity::Even), enf};
}

inline std::vector<ModulusRecord> simulate_modulus(unsigned n, std::size_t count, std::uint64_t seed, double alpha = 1.0,
                                                   unsigned workers = 1, std::uint64_t first_id = 0) {
    const auto spec = modulus_field(n);
    const FieldSampler sampler(spec);
    return map_replicas<ModulusRecord>(sampler, MeasureKind::seneta_heyde(FieldKind::StarY),
                                       mix_seed(seed, "modulus-" + std::to_string(n)), first_id, count, workers,
                                       [&](std::uint64_t id, const DyadicPyramid& p) { return modulus_record(id, p, n, alpha); });
}

struct ModulusPoint {
    unsigned n = 0;
    double p_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double mean_max = 0.0;
    std::size_t replicas = 0;
    bool resolvable = false;
};

struct ModulusCurve {
    double gamma = 0.0;
    std::vector<ModulusPoint> points;
    stats::LinearFit fit; // log p_hat against log n over resolvable points

    /// Each step down in n either decreases p_hat or stays within overlapping CIs.
    bool nonincreasing() const {
        for (std::size_t i = 1; i < points.size(); ++i) {
            const auto& a = points[i - 1];
            const auto& b = points[i];
            if (b.p_hat > a.p_hat && b.ci_lo > a.ci_hi) return false;
        }
        return true;
    }
    bool slope_nonpositive() const { return fit.slope + 1.96 * fit.slope_se <= 0.0; }
};

/// P(max over even level-n intervals >= n^{-gamma}) for each n.
inline ModulusCurve modulus_decay(const std::map<unsigned, std::vector<double>>& max_even, double gamma,
                                  std::uint64_t seed = stats::kBootstrapSeed) {
    if (!(gamma > 0.0 && gamma < 0.5)) throw ConfigError("modulus_decay: gamma must lie in (0, 1/2)");
    ModulusCurve c;
    c.gamma = gamma;
    std::vector<double> lx, ly;
    for (const auto& [n, maxima] : max_even) {
        if (maxima.empty()) throw std::invalid_argument("modulus_decay: empty ensemble");
        const double thr = std::pow(static_cast<double>(n), -gamma);
        const auto k = static_cast<std::size_t>(std::count_if(maxima.begin(), maxima.end(), [thr](double v) { return v >= thr; }));
        const auto ci = stats::bootstrap_proportion(k, maxima.size(), seed);
        ModulusPoint pt{n, ci.value, ci.lo, ci.hi, stats::mean(maxima), maxima.size(), k >= 10};
        c.points.push_back(pt);
        if (k > 0) {
            lx.push_back(std::log(static_cast<double>(n)));
            ly.push_back(std::log(pt.p_hat));
        }
    }
    if (lx.size() >= 2) c.fit = stats::linear_fit(lx, ly);
    return c;
}

struct EnfRow {
    unsigned n = 0;
    stats::Estimate mean; // E mu(E_n^f)
    double partial_sum = 0.0;
};

inline std::vector<EnfRow> enf_mass(const std::map<unsigned, std::vector<double>>& enf,
                                    std::uint64_t seed = stats::kBootstrapSeed) {
    std::vector<EnfRow> rows;
    double running = 0.0;
    for (const auto& [n, v] : enf) {
        const auto est = stats::bootstrap_mean(v, seed);
        running += est.value;
        rows.push_back({n, est, running});
    }
    return rows;
}

struct CoverSum {
    double sum = 0.0;   // sum over levels k in [n, K] of |I|^s for intervals with mass >= f(k)
    double bound = 0.0; // total * sum_k 2^{-ks/2}
    bool threshold_condition = true; // 2^{-ks/2} <= f(k) at every level used
};

inline CoverSum cover_sum(const DyadicPyramid& p, unsigned n, unsigned last, const std::function<double(unsigned)>& f,
                          double s) {
    if (!(s > 0.0)) throw ConfigError("cover_sum: s must be positive");
    if (last > p.finest_level() || n > last) throw ConfigError("cover_sum: bad level range");
    CoverSum c;
    for (unsigned k = n; k <= last; ++k) {
        const double fk = f(k);
        const double len_s = std::exp2(-static_cast<double>(k) * s);
        for (double v : p.level(k)) {
            if (v >= fk) c.sum += len_s;
        }
        const double half = std::exp2(-static_cast<double>(k) * s / 2.0);
        c.bound += half;
        if (half > fk) c.threshold_condition = false;
    }
    c.bound *= p.total();
    return c;
}

} // namespace chaoslab
