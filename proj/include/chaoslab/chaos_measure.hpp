#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "chaoslab/errors.hpp"
#include "chaoslab/field_kernels.hpp"
#include "chaoslab/gaussian_sampler.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/stats.hpp"

namespace chaoslab {

inline constexpr double kBetaCritical = std::numbers::sqrt2;

enum class MeasureVariant { Subcritical, Derivative, SenetaHeyde };

inline std::string_view to_string(MeasureVariant v) {
    switch (v) {
    case MeasureVariant::Subcritical: return "subcritical";
    case MeasureVariant::Derivative: return "derivative";
    case MeasureVariant::SenetaHeyde: return "seneta-heyde";
    }
    return "?";
}

inline MeasureVariant measure_variant_from_string(std::string_view s) {
    if (s == "subcritical") return MeasureVariant::Subcritical;
    if (s == "derivative") return MeasureVariant::Derivative;
    if (s == "seneta-heyde") return MeasureVariant::SenetaHeyde;
    throw ConfigError("unknown measure kind '" + std::string(s) + "' (expected subcritical, derivative, seneta-heyde)");
}

struct MeasureKind {
    MeasureVariant variant = MeasureVariant::SenetaHeyde;
    double beta = kBetaCritical;
    FieldKind field_kind = FieldKind::ExactX;

    static MeasureKind subcritical(double beta, FieldKind fk = FieldKind::ExactX) {
        MeasureKind k{MeasureVariant::Subcritical, beta, fk};
        k.validate();
        return k;
    }
    static MeasureKind derivative(FieldKind fk = FieldKind::ExactX) { return {MeasureVariant::Derivative, kBetaCritical, fk}; }
    static MeasureKind seneta_heyde(FieldKind fk = FieldKind::ExactX) {
        return {MeasureVariant::SenetaHeyde, kBetaCritical, fk};
    }

    // beta = 0 is tolerated as the degenerate unit-density case.
    void validate() const {
        if (variant == MeasureVariant::Subcritical) {
            if (!(beta >= 0.0 && beta < kBetaCritical)) {
                throw ConfigError("subcritical measure needs 0 < beta < sqrt(2), got " + std::to_string(beta));
            }
        } else if (beta != kBetaCritical) {
            throw ConfigError("critical measures fix beta = sqrt(2)");
        }
    }
    bool signed_masses() const { return variant == MeasureVariant::Derivative; }
};

/// Density of the measure at one grid point, given field value x and its variance.
inline double measure_density(const MeasureKind& kind, double x, double var, double t) {
    switch (kind.variant) {
    case MeasureVariant::Subcritical:
        return std::exp(kind.beta * x - 0.5 * kind.beta * kind.beta * var);
    case MeasureVariant::Derivative:
        return (kBetaCritical * var - x) * std::exp(kBetaCritical * x - var);
    case MeasureVariant::SenetaHeyde:
        return std::sqrt(t) * std::exp(kBetaCritical * x - var);
    }
    return 0.0;
}

/// Masses of the 2^level dyadic intervals.
struct DyadicMasses {
    unsigned level = 0;
    std::vector<double> masses;
    MeasureKind kind;
    double t = 0.0;

    /// Level-(n-1) masses as pairwise sums; the same operation that built
    /// this level, so refinement additivity is exact in floating point.
    DyadicMasses coarsen() const {
        if (level == 0) throw std::invalid_argument("cannot coarsen level 0");
        DyadicMasses out{level - 1, std::vector<double>(masses.size() / 2), kind, t};
        for (std::size_t i = 0; i < out.masses.size(); ++i) out.masses[i] = masses[2 * i] + masses[2 * i + 1];
        return out;
    }

    double total() const {
        DyadicMasses cur = *this;
        while (cur.level > 0) cur = cur.coarsen();
        return cur.masses[0];
    }
};

/// Every dyadic level from the quadrature cells (level log2 m) up to level 0.
class DyadicPyramid {
public:
    DyadicPyramid(std::vector<double> cell_masses, MeasureKind kind, double t) : kind_(kind), t_(t) {
        if (!is_power_of_two(cell_masses.size())) throw std::invalid_argument("cell count must be a power of two");
        levels_.push_back(std::move(cell_masses));
        while (levels_.back().size() > 1) {
            const auto& fine = levels_.back();
            std::vector<double> coarse(fine.size() / 2);
            for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = fine[2 * i] + fine[2 * i + 1];
            levels_.push_back(std::move(coarse));
        }
        std::reverse(levels_.begin(), levels_.end());
    }

    unsigned finest_level() const { return static_cast<unsigned>(levels_.size() - 1); }
    std::span<const double> level(unsigned n) const {
        if (n > finest_level()) {
            throw ConfigError("dyadic level " + std::to_string(n) + " is finer than the grid (max " +
                              std::to_string(finest_level()) + ")");
        }
        return levels_[n];
    }
    DyadicMasses masses(unsigned n) const {
        const auto l = level(n);
        return {n, std::vector<double>(l.begin(), l.end()), kind_, t_};
    }
    double total() const { return levels_[0][0]; }

private:
    std::vector<std::vector<double>> levels_;
    MeasureKind kind_;
    double t_;
};

/// Midpoint-rule cell masses h * density(x_i).
inline std::vector<double> cell_masses(const FieldSample& field, const MeasureKind& kind) {
    kind.validate();
    const double h = field.spec.spacing();
    std::vector<double> out(field.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = h * measure_density(kind, field.values[i], field.variance_profile[i], field.spec.t);
    }
    return out;
}

inline DyadicPyramid measure_pyramid(const FieldSample& field, const MeasureKind& kind) {
    return DyadicPyramid(cell_masses(field, kind), kind, field.spec.t);
}

inline DyadicMasses measure_masses(const FieldSample& field, const MeasureKind& kind, unsigned level) {
    if ((std::size_t{1} << level) > field.spec.m) {
        throw ConfigError("level " + std::to_string(level) + " too fine for grid m=" + std::to_string(field.spec.m));
    }
    return measure_pyramid(field, kind).masses(level);
}

inline DyadicMasses subcritical_masses(const FieldSample& field, double beta, unsigned level) {
    return measure_masses(field, MeasureKind::subcritical(beta, field.spec.kind), level);
}

inline DyadicMasses derivative_masses(const FieldSample& field, unsigned level) {
    return measure_masses(field, MeasureKind::derivative(field.spec.kind), level);
}

inline DyadicMasses seneta_heyde_masses(const FieldSample& field, unsigned level) {
    return measure_masses(field, MeasureKind::seneta_heyde(field.spec.kind), level);
}

/// (mass of [0,1/2], mass of [1/2,1]).
inline std::pair<double, double> halves(const DyadicMasses& dm) {
    if (dm.level == 0) throw std::invalid_argument("halves needs level >= 1");
    DyadicMasses cur = dm;
    while (cur.level > 1) cur = cur.coarsen();
    return {cur.masses[0], cur.masses[1]};
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleRecord {
    std::uint64_t replica_id = 0;
    double total = 0.0;
    double m0 = 0.0;
    double m1 = 0.0;
    double max_level = 0.0; // largest dyadic mass at the configured level

    bool operator==(const EnsembleRecord&) const = default;
};

struct EnsembleSpec {
    FieldSpec field;
    MeasureKind kind;
    unsigned level = 1;
    std::uint64_t seed = 0;

    void validate() const {
        field.validate();
        kind.validate();
        if (kind.field_kind != field.kind) throw ConfigError("measure field kind does not match field spec");
        if (level < 1 || (std::size_t{1} << level) > field.m) {
            throw ConfigError("ensemble level must satisfy 1 <= level and 2^level <= m");
        }
    }
    bool operator==(const EnsembleSpec& o) const {
        return field.kind == o.field.kind && field.t == o.field.t && field.m == o.field.m &&
               kind.variant == o.kind.variant && kind.beta == o.kind.beta && level == o.level && seed == o.seed;
    }
};

struct Ensemble {
    EnsembleSpec spec;
    std::vector<EnsembleRecord> records;

    std::size_t size() const { return records.size(); }

    std::vector<double> column(double EnsembleRecord::*field) const {
        std::vector<double> out(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].*field;
        return out;
    }
    std::vector<double> totals() const { return column(&EnsembleRecord::total); }
};

/// Concatenation of two ensembles built from the same spec with disjoint stream ids.
inline Ensemble merge(const Ensemble& a, const Ensemble& b) {
    if (a.records.empty()) return b;
    if (b.records.empty()) return a;
    if (!(a.spec == b.spec)) throw ConfigError("cannot merge ensembles with different specs");
    std::unordered_set<std::uint64_t> ids;
    ids.reserve(a.size());
    for (const auto& r : a.records) ids.insert(r.replica_id);
    for (const auto& r : b.records) {
        if (ids.count(r.replica_id)) {
            throw ConfigError("cannot merge: stream id " + std::to_string(r.replica_id) + " appears in both ensembles");
        }
    }
    Ensemble out{a.spec, a.records};
    out.records.insert(out.records.end(), b.records.begin(), b.records.end());
    std::sort(out.records.begin(), out.records.end(),
              [](const auto& x, const auto& y) { return x.replica_id < y.replica_id; });
    return out;
}

inline EnsembleRecord make_record(std::uint64_t id, const DyadicPyramid& pyr, unsigned level) {
    const auto l1 = pyr.level(1);
    const auto ln = pyr.level(level);
    return {id, pyr.total(), l1[0], l1[1], *std::max_element(ln.begin(), ln.end())};
}

/// Applies fn(stream_id, pyramid) to replicas first_id .. first_id+count-1.
template <typename T, typename Fn>
std::vector<T> map_replicas(const FieldSampler& sampler, const MeasureKind& kind, std::uint64_t seed,
                            std::uint64_t first_id, std::size_t count, unsigned workers, Fn&& fn) {
    return parallel_map_ids<T>(first_id, count, workers, [&](std::uint64_t id) {
        RngStream rng(seed, id);
        const FieldSample f = sampler.sample(rng);
        return fn(id, measure_pyramid(f, kind));
    });
}

inline Ensemble simulate_ensemble(const EnsembleSpec& spec, std::uint64_t first_id, std::size_t count,
                                  unsigned workers = 1) {
    spec.validate();
    const FieldSampler sampler(spec.field);
    Ensemble e{spec, {}};
    e.records = map_replicas<EnsembleRecord>(sampler, spec.kind, spec.seed, first_id, count, workers,
                                             [&](std::uint64_t id, const DyadicPyramid& p) {
                                                 return make_record(id, p, spec.level);
                                             });
    return e;
}

/// Mean of Y^h over the ensemble totals with a percentile-bootstrap CI.
inline stats::Estimate estimate_moment(std::span<const double> totals, double h,
                                       std::uint64_t seed = stats::kBootstrapSeed) {
    if (totals.empty()) throw std::invalid_argument("estimate_moment: empty ensemble");
    if (h == 0.0) return {1.0, 1.0, 1.0};
    std::vector<double> y(totals.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(totals[i] > 0.0)) throw NumericError("estimate_moment needs positive masses");
        y[i] = std::pow(totals[i], h);
    }
    return stats::bootstrap_mean(y, seed);
}

inline stats::Estimate estimate_moment(const Ensemble& e, double h) { return estimate_moment(e.totals(), h); }

} // namespace chaoslab
