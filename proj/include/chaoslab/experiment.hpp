#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chaoslab/cascade.hpp"
#include "chaoslab/chaos_measure.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/gaussian_sampler.hpp"
#include "chaoslab/inequality_oracles.hpp"
#include "chaoslab/io.hpp"
#include "chaoslab/modulus_lab.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/poisson_solver.hpp"
#include "chaoslab/tail_lab.hpp"

namespace chaoslab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr std::size_t kChunkSize = 1000; // stream ids per flushed chunk

struct PoissonConfig {
    std::string family = "psi0"; // psi0 | smooth-step
    double sigma = 1.0;
    double s = 1.0;
    double L = 0.0; // 0: 20 sigma
    double h = 0.0; // 0: sigma / 100
};

struct OraclesConfig {
    std::vector<std::string> tests{"torus", "kahane", "borell-tis", "sum-tail", "peyriere"};
    double h = 0.5;
    double epsilon = 1.0;
};

struct CascadeConfig {
    std::vector<unsigned> depths{4, 5, 6, 7, 8, 9, 10, 11, 12};
    double q = 0.5;
};

struct ModulusConfig {
    std::vector<unsigned> levels{6, 7, 8, 9, 10, 11, 12};
    double gamma = 0.25;
    double alpha = 1.0;
};

struct ExperimentConfig {
    std::string experiment = "measure";
    FieldSpec field = FieldSpec::coupled(FieldKind::ExactX, 1024);
    MeasureKind measure = MeasureKind::seneta_heyde();
    unsigned level = 8;
    std::size_t replicas = 1000;
    std::uint64_t seed = 1;
    std::string out = "out";
    unsigned workers = 0;
    std::vector<double> moments{0.5};
    PoissonConfig poisson;
    OraclesConfig oracles;
    CascadeConfig cascade;
    ModulusConfig modulus;

    EnsembleSpec ensemble_spec() const { return {field, measure, level, seed}; }
};

inline const std::set<std::string>& experiment_names() {
    static const std::set<std::string> names{"sample", "measure", "tail", "poisson", "oracles", "cascade", "modulus"};
    return names;
}

namespace detail {

// Walks a JSON object, remembering which keys were consumed so that anything
// left over can be reported with its full path.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }
    ~ObjectReader() = default;

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    std::string path(const std::string& key) const { return path_ + "." + key; }

    template <typename T>
    void get(const std::string& key, T& out) {
        const json* v = find(key);
        if (!v) return;
        try {
            if constexpr (std::is_same_v<T, unsigned> || std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
                if (!v->is_number_integer() || v->get<long long>() < 0) throw ConfigError(path(key) + ": expected a nonnegative integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v->is_number()) throw ConfigError(path(key) + ": expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v->is_string()) throw ConfigError(path(key) + ": expected a string");
            }
            out = v->get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path(key) + ": " + e.what());
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown config key " + path_ + "." + it.key());
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <typename T>
void check_range(bool ok, const std::string& path, const T& value, const std::string& rule) {
    if (!ok) {
        std::ostringstream msg;
        msg << path << ": " << value << " violates " << rule;
        throw ConfigError(msg.str());
    }
}

} // namespace detail

/// Parses and validates a config; every unknown key is rejected by its path.
inline ExperimentConfig parse_config(const json& root) {
    ExperimentConfig c;
    detail::ObjectReader r(root, "$");
    int version = kConfigSchemaVersion;
    r.get("schema_version", version);
    if (version != kConfigSchemaVersion) throw ConfigError("$.schema_version: unsupported version " + std::to_string(version));
    r.get("experiment", c.experiment);
    if (!experiment_names().count(c.experiment)) throw ConfigError("$.experiment: unknown experiment '" + c.experiment + "'");
    r.get("level", c.level);
    r.get("replicas", c.replicas);
    r.get("seed", c.seed);
    r.get("out", c.out);
    r.get("workers", c.workers);
    if (const json* m = r.find("moments")) {
        if (!m->is_array()) throw ConfigError("$.moments: expected an array");
        c.moments = m->get<std::vector<double>>();
        for (double h : c.moments) detail::check_range(h >= 0.0 && h < 1.0, "$.moments", h, "0 <= h < 1");
    }

    std::string field_kind = std::string(to_string(c.field.kind));
    std::size_t m = c.field.m;
    std::optional<double> t;
    if (const json* f = r.find("field")) {
        detail::ObjectReader fr(*f, "$.field");
        fr.get("kind", field_kind);
        fr.get("m", m);
        if (const json* tv = fr.find("t"); tv && !tv->is_null()) {
            if (!tv->is_number()) throw ConfigError("$.field.t: expected a number");
            t = tv->get<double>();
        }
        fr.finish();
    }
    const FieldKind fk = field_kind_from_string(field_kind);
    detail::check_range(is_power_of_two(m), "$.field.m", m, "power of two");
    c.field = FieldSpec{fk, t ? *t : std::log(static_cast<double>(m)), m};
    c.field.validate();

    std::string mk = std::string(to_string(c.measure.variant));
    double beta = kBetaCritical;
    if (const json* mj = r.find("measure")) {
        detail::ObjectReader mr(*mj, "$.measure");
        mr.get("kind", mk);
        mr.get("beta", beta);
        mr.finish();
    }
    c.measure.variant = measure_variant_from_string(mk);
    c.measure.beta = c.measure.variant == MeasureVariant::Subcritical ? beta : kBetaCritical;
    c.measure.field_kind = fk;
    c.measure.validate();

    if (const json* pj = r.find("poisson")) {
        detail::ObjectReader pr(*pj, "$.poisson");
        pr.get("family", c.poisson.family);
        pr.get("sigma", c.poisson.sigma);
        pr.get("s", c.poisson.s);
        pr.get("L", c.poisson.L);
        pr.get("h", c.poisson.h);
        pr.finish();
        if (c.poisson.family != "psi0" && c.poisson.family != "smooth-step") {
            throw ConfigError("$.poisson.family: expected psi0 or smooth-step");
        }
        detail::check_range(c.poisson.sigma > 0.0, "$.poisson.sigma", c.poisson.sigma, "> 0");
        detail::check_range(c.poisson.s > 0.0, "$.poisson.s", c.poisson.s, "> 0");
    }
    if (const json* oj = r.find("oracles")) {
        detail::ObjectReader orr(*oj, "$.oracles");
        if (const json* tj = orr.find("tests")) {
            if (!tj->is_array()) throw ConfigError("$.oracles.tests: expected an array");
            c.oracles.tests = tj->get<std::vector<std::string>>();
            static const std::set<std::string> known{"torus", "kahane", "borell-tis", "sum-tail", "peyriere", "mixed-moment"};
            for (const auto& s : c.oracles.tests) {
                if (!known.count(s)) throw ConfigError("$.oracles.tests: unknown test '" + s + "'");
            }
        }
        orr.get("h", c.oracles.h);
        orr.get("epsilon", c.oracles.epsilon);
        orr.finish();
        detail::check_range(c.oracles.h > 0.0 && c.oracles.h < 1.0, "$.oracles.h", c.oracles.h, "0 < h < 1");
        detail::check_range(c.oracles.epsilon > 0.0, "$.oracles.epsilon", c.oracles.epsilon, "> 0");
    }
    if (const json* cj = r.find("cascade")) {
        detail::ObjectReader cr(*cj, "$.cascade");
        if (const json* dj = cr.find("depths")) {
            if (!dj->is_array()) throw ConfigError("$.cascade.depths: expected an array");
            c.cascade.depths = dj->get<std::vector<unsigned>>();
        }
        cr.get("q", c.cascade.q);
        cr.finish();
        detail::check_range(c.cascade.q > 0.0 && c.cascade.q < 1.0, "$.cascade.q", c.cascade.q, "0 < q < 1");
        for (unsigned d : c.cascade.depths) detail::check_range(d >= 1 && d <= 24, "$.cascade.depths", d, "1 <= n <= 24");
    }
    if (const json* mj = r.find("modulus")) {
        detail::ObjectReader mr(*mj, "$.modulus");
        if (const json* lj = mr.find("levels")) {
            if (!lj->is_array()) throw ConfigError("$.modulus.levels: expected an array");
            c.modulus.levels = lj->get<std::vector<unsigned>>();
        }
        mr.get("gamma", c.modulus.gamma);
        mr.get("alpha", c.modulus.alpha);
        mr.finish();
        detail::check_range(c.modulus.gamma > 0.0 && c.modulus.gamma < 0.5, "$.modulus.gamma", c.modulus.gamma, "0 < gamma < 1/2");
        detail::check_range(c.modulus.alpha > 1.0 / 3.0, "$.modulus.alpha", c.modulus.alpha, "alpha > 1/3");
        for (unsigned n : c.modulus.levels) detail::check_range(n >= 3 && n <= 20, "$.modulus.levels", n, "3 <= n <= 20");
    }
    r.finish();

    detail::check_range(c.replicas >= 1, "$.replicas", c.replicas, ">= 1");
    if (c.experiment == "measure" || c.experiment == "tail") {
        detail::check_range(c.level >= 1 && (std::size_t{1} << c.level) <= c.field.m, "$.level", c.level, "1 <= level, 2^level <= m");
    }
    if (c.experiment == "tail") detail::check_range(c.replicas >= 1000, "$.replicas", c.replicas, ">= 1000 for tail");
    return c;
}

inline ExperimentConfig load_config(const fs::path& p) {
    auto is = io::open_in(p);
    json j;
    try {
        j = json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
    return parse_config(j);
}

/// Fully resolved config as JSON, written next to every run's outputs.
inline json to_json(const ExperimentConfig& c) {
    json j{{"schema_version", kConfigSchemaVersion},
           {"experiment", c.experiment},
           {"field", {{"kind", std::string(to_string(c.field.kind))}, {"m", c.field.m}, {"t", c.field.t}}},
           {"measure", {{"kind", std::string(to_string(c.measure.variant))}, {"beta", c.measure.beta}}},
           {"level", c.level},
           {"replicas", c.replicas},
           {"seed", c.seed},
           {"out", c.out},
           {"moments", c.moments}};
    // The worker count is deliberately left out: it never changes results.
    if (c.experiment == "poisson") {
        j["poisson"] = {{"family", c.poisson.family}, {"sigma", c.poisson.sigma}, {"s", c.poisson.s},
                        {"L", c.poisson.L}, {"h", c.poisson.h}};
    }
    if (c.experiment == "oracles") {
        j["oracles"] = {{"tests", c.oracles.tests}, {"h", c.oracles.h}, {"epsilon", c.oracles.epsilon}};
    }
    if (c.experiment == "cascade") j["cascade"] = {{"depths", c.cascade.depths}, {"q", c.cascade.q}};
    if (c.experiment == "modulus") {
        j["modulus"] = {{"levels", c.modulus.levels}, {"gamma", c.modulus.gamma}, {"alpha", c.modulus.alpha}};
    }
    return j;
}

// ---------------------------------------------------------------------------
// Chunked ensemble generation with resume

inline fs::path chunk_path(const fs::path& out, std::size_t index) {
    char name[32];
    std::snprintf(name, sizeof name, "chunk_%06zu.bin", index);
    return out / "chunks" / name;
}

/// Generates replicas 0..N-1 in chunks of kChunkSize stream ids. A chunk whose
/// file already exists and matches the spec is loaded instead of recomputed,
/// so an interrupted run resumes where it stopped with identical bytes.
inline Ensemble run_chunked_ensemble(const EnsembleSpec& spec, std::size_t replicas, const fs::path& out,
                                     unsigned workers, const std::function<void(std::size_t, std::size_t)>& progress = {}) {
    spec.validate();
    Ensemble all{spec, {}};
    all.records.reserve(replicas);
    const std::size_t chunks = (replicas + kChunkSize - 1) / kChunkSize;
    std::optional<FieldSampler> sampler;
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::uint64_t first = c * kChunkSize;
        const std::size_t count = std::min(kChunkSize, replicas - first);
        const fs::path path = chunk_path(out, c);
        Ensemble part;
        bool loaded = false;
        if (fs::exists(path)) {
            try {
                part = io::load_store(path);
                loaded = part.spec == spec && part.records.size() == count && part.records.front().replica_id == first;
            } catch (const Error&) {
                loaded = false;
            }
        }
        if (!loaded) {
            if (!sampler) sampler.emplace(spec.field);
            part = Ensemble{spec, map_replicas<EnsembleRecord>(*sampler, spec.kind, spec.seed, first, count, workers,
                                                                [&](std::uint64_t id, const DyadicPyramid& p) {
                                                                    return make_record(id, p, spec.level);
                                                                })};
            auto os = io::open_out(path, true);
            io::write_store(os, part);
        }
        all.records.insert(all.records.end(), part.records.begin(), part.records.end());
        if (progress) progress(c + 1, chunks);
    }
    return all;
}

// ---------------------------------------------------------------------------
// Suites

namespace detail {

inline json estimate_json(const stats::Estimate& e) { return json{{"estimate", e.value}, {"ci", {e.lo, e.hi}}}; }

inline json report_json(const InequalityReport& r) {
    return json{{"name", r.name},
                {"left", estimate_json(r.left)},
                {"right", estimate_json(r.right)},
                {"paired_difference", estimate_json(r.difference)},
                {"verdict", std::string(to_string(r.verdict))},
                {"N", r.n}};
}

inline void write_json(const fs::path& p, const json& j) { io::write_text(p, j.dump(2) + "\n"); }

inline void run_sample(const ExperimentConfig& c, const fs::path& out, unsigned workers) {
    const FieldSampler sampler(c.field);
    const auto values = parallel_map_ids<std::vector<double>>(0, c.replicas, workers, [&](std::uint64_t id) {
        RngStream rng(c.seed, id);
        return sampler.sample(rng).values;
    });
    {
        auto os = io::open_out(out / "samples.bin", true);
        for (const auto& v : values) write_field_sample(os, FieldSample{c.field, v, variance_profile(c.field)});
    }
    auto os = io::open_out(out / "sample_first.csv");
    os << "i,x,value\n";
    for (std::size_t i = 0; i < c.field.m; ++i) os << i << ',' << io::fmt(c.field.point(i)) << ',' << io::fmt(values[0][i]) << '\n';
    const std::size_t mid = c.field.m / 2;
    std::vector<double> mids(values.size());
    for (std::size_t r = 0; r < values.size(); ++r) mids[r] = values[r][mid];
    write_json(out / "sample_summary.json",
               json{{"N", c.replicas},
                    {"kind", std::string(to_string(c.field.kind))},
                    {"t", c.field.t},
                    {"m", c.field.m},
                    {"variance_expected", field_variance(c.field.kind, c.field.t)},
                    {"variance_midpoint", stats::variance(mids)}});
}

inline Ensemble run_measure(const ExperimentConfig& c, const fs::path& out, unsigned workers) {
    const auto e = run_chunked_ensemble(c.ensemble_spec(), c.replicas, out, workers);
    io::save_store(out / "ensemble.bin", e);
    auto os = io::open_out(out / "ensemble.csv");
    io::write_csv(os, e);
    json s = io::summary(e);
    if (c.measure.variant != MeasureVariant::Derivative) {
        json mom = json::array();
        for (double h : c.moments) mom.push_back({{"h", h}, {"moment", estimate_json(estimate_moment(e, h))}});
        s["moments"] = mom;
    }
    write_json(out / "summary.json", s);
    return e;
}

inline void run_tail(const ExperimentConfig& c, const fs::path& out, unsigned workers) {
    if (c.measure.variant == MeasureVariant::Derivative) throw ConfigError("$.measure.kind: tail needs a positive measure");
    const auto e = run_measure(c, out, workers);
    const auto totals = e.totals();
    const auto grid = quantile_grid(totals, 1e-1, std::max(10.0 / static_cast<double>(totals.size()), 1e-5), 25);
    const auto curve = tail_curve(totals, grid);
    auto os = io::open_out(out / "tail.csv");
    os << "lambda,survival,lambda_p,ci_lo,ci_hi,resolvable\n";
    for (std::size_t i = 0; i < curve.lambda.size(); ++i) {
        os << io::fmt(curve.lambda[i]) << ',' << io::fmt(curve.survival[i]) << ',' << io::fmt(curve.lambda_p[i]) << ','
           << io::fmt(curve.ci_lo[i]) << ',' << io::fmt(curve.ci_hi[i]) << ',' << (curve.resolvable[i] ? 1 : 0) << '\n';
    }
    const auto m0 = e.column(&EnsembleRecord::m0);
    const auto m1 = e.column(&EnsembleRecord::m1);
    const auto c1 = estimate_c1(m0, m1);
    json j{{"N", totals.size()}, {"c1_hat", c1.value}, {"ci", {c1.lo, c1.hi}}};
    j["c1_symmetrized"] = estimate_json(estimate_c1(m0, m1, true));
    if (totals.size() >= 10000) {
        const auto slope = survival_slope(totals);
        j["slope_hat"] = slope.slope;
        j["slope_se"] = slope.slope_se;
    }
    const auto pl = tail_plateau(totals);
    j["plateau"] = {{"level", pl.level}, {"min", pl.min}, {"max", pl.max}, {"ratio", pl.ratio()},
                    {"lambda_range", {pl.lambda_lo, pl.lambda_hi}}};
    write_json(out / "tail_summary.json", j);
}

inline void run_poisson(const ExperimentConfig& c, const fs::path& out) {
    const auto& pc = c.poisson;
    const auto psi = pc.family == "psi0" ? std::function<double(double)>([s = pc.sigma](double x) { return poisson::psi0(x, s); })
                                         : poisson::smooth_step_psi(pc.s, pc.sigma);
    const auto prob = poisson::make_problem(pc.sigma, psi, pc.L, pc.h);
    const auto sol = poisson::solve(prob);
    auto os = io::open_out(out / "poisson.csv");
    os << "x,psi,F\n";
    for (std::size_t i = 0; i < sol.x.size(); ++i) os << io::fmt(sol.x[i]) << ',' << io::fmt(prob.psi[i]) << ',' << io::fmt(sol.F[i]) << '\n';
    write_json(out / "poisson.json", json{{"sigma", sol.sigma}, {"A", sol.A}, {"asymptote", sol.asymptote},
                                          {"predicted", sol.predicted}, {"residual", sol.residual}});
}

inline void run_oracles(const ExperimentConfig& c, const fs::path& out, unsigned workers) {
    json rep = json::object();
    const auto want = [&](const char* name) {
        return std::find(c.oracles.tests.begin(), c.oracles.tests.end(), name) != c.oracles.tests.end();
    };
    if (want("torus")) {
        json arr = json::array();
        for (std::size_t n : {std::size_t{2}, std::size_t{10}, std::size_t{1000}}) {
            const auto t = torus_counterexample(n);
            arr.push_back({{"N", n}, {"tail_bound_exact", t.tail_bound_exact}, {"full_cycle", t.every_cell_full_cycle},
                           {"harmonic", t.harmonic}, {"log_N", t.log_n}, {"holds", t.holds()}});
        }
        rep["torus"] = arr;
    }
    if (want("kahane")) {
        json arr = json::array();
        for (const auto& pair : {kahane_pair_identical(), kahane_pair_disjoint(), kahane_pair_brw()}) {
            arr.push_back(report_json(kahane_test(pair.name, pair.a, pair.b, c.oracles.h, c.replicas, c.seed, workers)));
        }
        rep["kahane"] = arr;
    }
    if (want("borell-tis")) {
        const FieldSpec spec{FieldKind::StarY, 5.0 * std::numbers::ln2, 1024};
        const auto b = borell_tis_test(spec, 0.125, c.oracles.epsilon, c.replicas, c.seed, 15, workers);
        rep["borell_tis"] = {{"interval", b.interval}, {"L", b.increment_const}, {"epsilon", b.epsilon},
                             {"threshold_slope", b.threshold_slope}, {"slope", b.fit.slope}, {"slope_se", b.fit.slope_se},
                             {"c_eps", b.c_eps}, {"expected_sup", b.expected_sup},
                             {"dominates_pointwise", b.dominates_pointwise}, {"verdict", std::string(to_string(b.verdict))},
                             {"N", b.n}};
    }
    if (want("sum-tail")) {
        json arr = json::array();
        std::vector<double> lam;
        for (int i = 0; i <= 40; ++i) lam.push_back(std::pow(10.0, -1.0 + 0.1 * i));
        for (std::size_t n : {std::size_t{1}, std::size_t{64}}) {
            const std::vector<double> w(n, 1.0 / static_cast<double>(n));
            const auto r = sum_tail_test(w, pareto_copies(), lam, c.replicas, c.seed, 1.0, workers);
            arr.push_back({{"generator", "pareto"}, {"N", n}, {"c_empirical", r.c_empirical}, {"argmax_lambda", r.argmax_lambda}});
        }
        for (std::size_t n : {std::size_t{10}, std::size_t{1000}}) {
            const std::vector<double> w(n, 1.0 / static_cast<double>(n));
            const auto r = sum_tail_test(w, torus_copies(), lam, std::min<std::size_t>(c.replicas, 10000), c.seed, 1.0, workers);
            arr.push_back({{"generator", "torus"}, {"N", n}, {"c_empirical", r.c_empirical}, {"argmax_lambda", r.argmax_lambda}});
        }
        rep["sum_tail"] = arr;
    }
    if (want("peyriere") || want("mixed-moment")) {
        EnsembleSpec es = c.ensemble_spec();
        es.level = std::min<unsigned>(es.level, static_cast<unsigned>(std::log2(static_cast<double>(es.field.m))));
        const auto e = run_chunked_ensemble(es, c.replicas, out, workers);
        const auto totals = e.totals();
        if (want("peyriere")) {
            const auto ps = peyriere_samples(c.seed, c.replicas, totals, workers);
            const auto q = check_qb(ps, totals);
            rep["peyriere"] = {{"N", q.n},
                               {"mean_weight", estimate_json(q.mean_weight)},
                               {"p_j0", estimate_json(q.p_j0)},
                               {"ks_neg_log_w", {{"D", q.neg_log_w.statistic}, {"critical", q.neg_log_w.critical}, {"pass", q.ks_pass()}}},
                               {"w_moment", {{"s", q.s}, {"estimate", q.w_moment.value}, {"ci", {q.w_moment.lo, q.w_moment.hi}},
                                             {"expected", q.w_moment_expected}, {"pass", q.moment_pass()}}},
                               {"corr", {{"value", q.corr}, {"bound", q.corr_bound}, {"pass", q.corr_pass()}}},
                               {"ks_y_law", {{"D", q.y_law.statistic}, {"critical", q.y_law.critical}, {"pass", q.y_law_pass()}}}};
        }
        if (want("mixed-moment")) {
            rep["mixed_moment"] = estimate_json(mixed_moment(e.column(&EnsembleRecord::m0), e.column(&EnsembleRecord::m1), c.oracles.h));
        }
    }
    write_json(out / "oracles.json", rep);
}

inline void run_cascade(const ExperimentConfig& c, const fs::path& out, unsigned workers) {
    auto os = io::open_out(out / "cascade.csv");
    os << "n,q,estimate,ci_lo,ci_hi\n";
    json cmp = json::array();
    for (unsigned n : c.cascade.depths) {
        const auto totals = parallel_map_ids<double>(0, c.replicas, workers, [&](std::uint64_t id) {
            RngStream rng(mix_seed(c.seed, "cascade-" + std::to_string(n)), id);
            return critical_cascade_total(n, rng);
        });
        const auto est = estimate_moment(totals, c.cascade.q);
        os << n << ',' << io::fmt(c.cascade.q) << ',' << io::fmt(est.value) << ',' << io::fmt(est.lo) << ',' << io::fmt(est.hi) << '\n';
        const auto r = check_comparison(n);
        cmp.push_back({{"n", n}, {"max_violation", r.max_violation}, {"constant_c", r.constant_c}});
    }
    write_json(out / "comparison.json", cmp);
}

inline void run_modulus(const ExperimentConfig& c, const fs::path& out, unsigned workers) {
    std::map<unsigned, std::vector<double>> max_even;
    std::map<unsigned, std::vector<double>> enf;
    for (unsigned n : c.modulus.levels) {
        const auto recs = simulate_modulus(n, c.replicas, c.seed, c.modulus.alpha, workers);
        for (const auto& r : recs) {
            max_even[n].push_back(r.max_even);
            enf[n].push_back(r.enf);
        }
    }
    const auto curve = modulus_decay(max_even, c.modulus.gamma);
    auto os = io::open_out(out / "modulus.csv");
    os << "n,p_hat,ci_lo,ci_hi,mean_max\n";
    for (const auto& p : curve.points) {
        os << p.n << ',' << io::fmt(p.p_hat) << ',' << io::fmt(p.ci_lo) << ',' << io::fmt(p.ci_hi) << ',' << io::fmt(p.mean_max) << '\n';
    }
    auto es = io::open_out(out / "enf.csv");
    es << "n,estimate,ci_lo,ci_hi,partial_sum\n";
    for (const auto& r : enf_mass(enf)) {
        es << r.n << ',' << io::fmt(r.mean.value) << ',' << io::fmt(r.mean.lo) << ',' << io::fmt(r.mean.hi) << ','
           << io::fmt(r.partial_sum) << '\n';
    }
    const auto g = gauge_exponents();
    json gj{{"gamma_star", g.gamma}, {"lambda_star", g.lambda}, {"discriminant", g.discriminant}, {"residual", g.residual},
            {"decay_slope", curve.fit.slope}, {"decay_slope_se", curve.fit.slope_se},
            {"nonincreasing", curve.nonincreasing()}};
    json f = json::array();
    for (unsigned n : c.modulus.levels) f.push_back({{"n", n}, {"f_alpha", gauge(n, c.modulus.alpha)}});
    gj["gauge"] = f;
    write_json(out / "gauge.json", gj);
}

} // namespace detail

/// Runs one suite and writes its artifacts (plus config.resolved.json) under c.out.
inline void run_experiment(const ExperimentConfig& c, unsigned workers_override = 0) {
    const unsigned workers = resolve_workers(workers_override ? workers_override : c.workers);
    const fs::path out(c.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
    detail::write_json(out / "config.resolved.json", to_json(c));
    if (c.experiment == "sample") detail::run_sample(c, out, workers);
    else if (c.experiment == "measure") detail::run_measure(c, out, workers);
    else if (c.experiment == "tail") detail::run_tail(c, out, workers);
    else if (c.experiment == "poisson") detail::run_poisson(c, out);
    else if (c.experiment == "oracles") detail::run_oracles(c, out, workers);
    else if (c.experiment == "cascade") detail::run_cascade(c, out, workers);
    else if (c.experiment == "modulus") detail::run_modulus(c, out, workers);
    else throw ConfigError("unknown experiment " + c.experiment);
}

} // namespace chaoslab
