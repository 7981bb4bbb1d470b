// Acceptance runner. `acceptance` runs AC1..AC9; `acceptance AC3 AC5` runs a subset.
// One line per criterion: "ACn PASS|FAIL <summary> (<seconds>s)". Exit status is
// nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chaoslab/chaoslab.hpp"

using namespace chaoslab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

unsigned workers() { return resolve_workers(0); }

// ---------------------------------------------------------------------------

Outcome ac1() {
    std::mt19937_64 g(20240601);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double sym = 0.0, cont = 0.0, scale = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double x = u(g), y = u(g), t = 0.01 + 12.0 * u(g);
        sym = std::max({sym, std::abs(cov_exact(x, y, t) - cov_exact(y, x, t)), std::abs(cov_star(x, y, t) - cov_star(y, x, t))});
        // both branch points, approached from each side
        const double b = std::exp(-t);
        for (double p : {b, 1.0}) {
            const double lo = p * (1.0 - 1e-15), hi = p * (1.0 + 1e-15);
            cont = std::max({cont, std::abs(cov_exact(0.0, lo, t) - cov_exact(0.0, hi, t)),
                             std::abs(cov_star(0.0, lo, t) - cov_star(0.0, hi, t))});
        }
        const double len = std::ldexp(1.0, -static_cast<int>(1 + 5 * u(g)));
        if (t < -std::log(len)) continue;
        const std::pair<double, double> pr{len * u(g), len * u(g)};
        scale = std::max(scale, verify_scale_kernel(len, t, std::span(&pr, 1)));
    }
    const double worst = std::max({sym, cont, scale});
    return {worst <= 1e-12, fmt("max deviation symmetry %.2e continuity %.2e scale %.2e over 1e4 inputs", sym, cont, scale)};
}

Outcome ac2() {
    const auto spec = FieldSpec::coupled(FieldKind::ExactX, 128);
    const CirculantSampler circ(spec);
    const CholeskyFactor chol(spec);
    const std::size_t n = 100000;
    const std::size_t points[] = {0, 63, 127};
    std::vector<std::vector<double>> a(3, std::vector<double>(n)), b(3, std::vector<double>(n));
    const std::size_t lags = 10;
    std::vector<std::vector<double>> lagcov(lags, std::vector<double>(n));
    std::vector<double> buf(spec.m);
    for (std::size_t r = 0; r < n; ++r) {
        RngStream r1(mix_seed(1, "ac2-circulant"), r), r2(mix_seed(1, "ac2-cholesky"), r);
        circ.sample_into(r1, buf);
        const auto v = chol.sample(r2);
        for (std::size_t p = 0; p < 3; ++p) {
            a[p][r] = buf[points[p]];
            b[p][r] = v[static_cast<Eigen::Index>(points[p])];
        }
        // per-replica average of X_i X_{i+k} along the grid; replicas are iid
        for (std::size_t k = 0; k < lags; ++k) {
            const std::size_t lag = k * 3;
            double s = 0.0;
            for (std::size_t i = 0; i + lag < spec.m; ++i) s += buf[i] * buf[i + lag];
            lagcov[k][r] = s / static_cast<double>(spec.m - lag);
        }
    }
    bool ok = true;
    double worst_ks = 0.0, worst_z = 0.0;
    for (std::size_t p = 0; p < 3; ++p) {
        const auto ks = stats::ks_two_sample(a[p], b[p]);
        ok = ok && ks.pass();
        worst_ks = std::max(worst_ks, ks.statistic / ks.critical);
    }
    for (std::size_t k = 0; k < lags; ++k) {
        const double want = kernel_at_distance(spec.kind, static_cast<double>(k * 3) * spec.spacing(), spec.t);
        const double z = std::abs(stats::mean(lagcov[k]) - want) / stats::standard_error(lagcov[k]);
        ok = ok && z < 3.0;
        worst_z = std::max(worst_z, z);
    }
    return {ok, fmt("m=128 N=1e5: worst KS D/critical %.3f at 3 points, worst lag z %.2f at 10 lags", worst_ks, worst_z)};
}

Outcome ac3() {
    const auto spec = FieldSpec::coupled(FieldKind::ExactX, std::size_t{1} << 14);
    const EnsembleSpec es{spec, MeasureKind::seneta_heyde(), 1, mix_seed(1, "ac3")};
    const auto e = simulate_ensemble(es, 0, 100000, workers());
    const auto totals = e.totals();
    const auto fit = survival_slope(totals);
    const auto pl = tail_plateau(totals);
    const auto c1 = estimate_c1(e.column(&EnsembleRecord::m0), e.column(&EnsembleRecord::m1), true);
    const double r = c1.value / pl.level;
    const bool ok = fit.slope >= -1.25 && fit.slope <= -0.80 && pl.ratio() < 2.0 && r < 2.0 && r > 0.5;
    return {ok, fmt("m=2^14 N=1e5: slope %.3f (+-%.3f), plateau %.3f on [%.3g,%.3g] max/min %.3f, c1 %.3f [%.3f,%.3f] ratio %.3f",
                    fit.slope, fit.slope_se, pl.level, pl.lambda_lo, pl.lambda_hi, pl.ratio(), c1.value, c1.lo, c1.hi, r)};
}

Outcome ac4() {
    const auto spec = FieldSpec::coupled(FieldKind::ExactX, 1024);
    const EnsembleSpec es{spec, MeasureKind::seneta_heyde(), 1, mix_seed(1, "ac4")};
    const auto totals = simulate_ensemble(es, 0, 100000, workers()).totals();
    const auto ps = peyriere_samples(mix_seed(1, "ac4-q"), 100000, totals, workers());
    const auto q = check_qb(ps, totals);
    const bool ok = q.ks_pass() && q.moment_pass() && q.corr_pass();
    return {ok, fmt("N=1e5: KS D %.4f crit %.4f; E W^-1/2 %.4f [%.4f,%.4f] want %.4f; |corr| %.4f < %.4f; "
                    "E weight %.4f; Y-law KS %s",
                    q.neg_log_w.statistic, q.neg_log_w.critical, q.w_moment.value, q.w_moment.lo, q.w_moment.hi,
                    q.w_moment_expected, std::abs(q.corr), q.corr_bound, q.mean_weight.value, q.y_law_pass() ? "pass" : "fail")};
}

Outcome ac5() {
    bool ok = true;
    double worst_asym = 0.0, worst_err = 0.0, worst_res = 0.0;
    auto check = [&](const poisson::Problem& p, const std::function<double(double)>& exact, double exclude) {
        const auto sol = poisson::solve(p);
        worst_asym = std::max(worst_asym, std::abs(sol.asymptote - 1.0));
        worst_res = std::max(worst_res, sol.residual);
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (std::abs(p.x[k]) < exclude) continue;
            worst_err = std::max(worst_err, std::abs(sol.F[k] - exact(p.x[k])));
        }
    };
    for (double sigma : {1.0, 1.3}) {
        // psi0 = H - tau * H, solved by the unit step itself
        check(poisson::make_problem(sigma, [sigma](double x) { return poisson::psi0(x, sigma); }),
              [](double x) { return x > 0.0 ? 1.0 : 0.0; }, 0.1 * sigma);
        for (double s : {0.5, 1.0, 2.0}) {
            check(poisson::make_problem(sigma, poisson::smooth_step_psi(s, sigma)),
                  [s](double x) { return poisson::normal_cdf(x / s); }, 0.0);
        }
    }
    ok = worst_asym < 1e-3 && worst_err < 1e-3 && worst_res <= 1e-6;
    return {ok, fmt("8 problems: worst |asymptote - 1| %.2e, sup error %.2e, residual %.2e", worst_asym, worst_err, worst_res)};
}

Outcome ac6() {
    bool ok = true;
    std::string d;
    for (std::size_t n : {std::size_t{2}, std::size_t{10}, std::size_t{1000}}) {
        const bool h = torus_counterexample(n).holds();
        ok = ok && h;
        d += fmt("torus N=%zu %s; ", n, h ? "exact" : "FAILED");
    }
    for (const auto& p : {kahane_pair_identical(), kahane_pair_disjoint(), kahane_pair_brw()}) {
        const auto r = kahane_test(p.name, p.a, p.b, 0.5, 100000, mix_seed(1, "ac6"), workers());
        ok = ok && r.verdict == Verdict::Holds;
        d += fmt("kahane %s %.4f vs %.4f %s; ", r.name.c_str(), r.left.value, r.right.value, std::string(to_string(r.verdict)).c_str());
    }
    const FieldSpec spec{FieldKind::StarY, 5.0 * std::numbers::ln2, 1024};
    const auto b = borell_tis_test(spec, 0.125, 1.0, 100000, mix_seed(1, "ac6-bt"), 15, workers());
    ok = ok && b.verdict == Verdict::Holds;
    d += fmt("borell-tis slope %.4f +- %.4f vs %.4f %s", b.fit.slope, b.fit.slope_se, b.threshold_slope,
             std::string(to_string(b.verdict)).c_str());
    return {ok, d};
}

Outcome ac7() {
    const auto cmp = check_comparison(8);
    double lo = INFINITY, hi = 0.0;
    std::string d;
    for (unsigned n = 4; n <= 12; ++n) {
        const auto totals = parallel_map_ids<double>(0, 10000, workers(), [n](std::uint64_t id) {
            RngStream rng(mix_seed(1, "ac7-" + std::to_string(n)), id);
            return critical_cascade_total(n, rng);
        });
        const double m = estimate_moment(totals, 0.5).value;
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    const bool ok = cmp.max_violation <= 0.0 && hi / lo < 2.0;
    return {ok, fmt("n=8 max violation %.3g, C %.4f; q=1/2 moments in [%.4f, %.4f] ratio %.3f over n=4..12",
                    cmp.max_violation, cmp.constant_c, lo, hi, hi / lo)};
}

Outcome ac8() {
    std::map<unsigned, std::vector<double>> max_even, enf;
    for (unsigned n = 3; n <= 12; ++n) {
        for (const auto& r : simulate_modulus(n, 10000, mix_seed(1, "ac8"), 1.0, workers())) {
            if (n >= 6) max_even[n].push_back(r.max_even);
            enf[n].push_back(r.enf);
        }
    }
    const auto curve = modulus_decay(max_even, 0.25);
    const auto g = gauge_exponents();
    const double l2 = std::numbers::ln2;
    const double quad = std::abs(l2 * g.lambda * g.lambda * g.gamma * g.gamma - g.lambda * g.gamma * g.gamma + 1.5);
    const bool exps = std::abs(g.gamma - std::sqrt(6.0 * l2)) <= 1e-12 && std::abs(g.lambda - 1.0 / (2.0 * l2)) <= 1e-12 &&
                      quad <= 1e-12;
    const auto rows = enf_mass(enf);
    const double first = rows.front().mean.value, last = rows.back().mean.value;
    std::string ps;
    for (const auto& p : curve.points) ps += fmt("%.4f ", p.p_hat);
    const bool ok = curve.nonincreasing() && curve.slope_nonpositive() && exps && last < first;
    return {ok, fmt("P(max>=n^-1/4) n=6..12: %sslope %.3f +- %.3f; gamma* %.6f lambda* %.6f quad %.1e; enf increment n=3 %.4f n=12 %.4f",
                    ps.c_str(), curve.fit.slope, curve.fit.slope_se, g.gamma, g.lambda, quad, first, last)};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// every output file except the resolved config (which records its own directory)
std::map<std::string, std::string> outputs(const fs::path& dir) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "config.resolved.json") continue;
        m[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return m;
}

Outcome ac9() {
    const fs::path root = fs::temp_directory_path() / "chaoslab_ac9";
    fs::remove_all(root);
    const std::vector<json> suites{
        {{"experiment", "sample"}, {"field", {{"m", 256}}}, {"replicas", 200}},
        {{"experiment", "measure"}, {"field", {{"m", 256}}}, {"level", 4}, {"replicas", 2500}},
        {{"experiment", "tail"}, {"field", {{"m", 256}}}, {"level", 4}, {"replicas", 3000}},
        {{"experiment", "poisson"}, {"poisson", {{"family", "smooth-step"}, {"s", 0.5}}}},
        {{"experiment", "oracles"}, {"field", {{"m", 256}}}, {"level", 4}, {"replicas", 3000},
         {"oracles", {{"tests", {"torus", "kahane", "borell-tis", "sum-tail", "peyriere", "mixed-moment"}}}}},
        {{"experiment", "cascade"}, {"replicas", 2000}, {"cascade", {{"depths", {4, 6, 8}}}}},
        {{"experiment", "modulus"}, {"replicas", 1000}, {"modulus", {{"levels", {3, 4, 5, 6}}}}},
    };
    bool ok = true;
    std::string d;
    for (const auto& base : suites) {
        const std::string name = base["experiment"].get<std::string>();
        std::map<std::string, std::string> ref;
        bool same = true;
        int run = 0;
        for (unsigned w : {1u, 1u, 3u}) {
            json j = base;
            j["seed"] = 7;
            j["out"] = (root / (name + "_" + std::to_string(run++))).string();
            run_experiment(parse_config(j), w);
            auto got = outputs(j["out"].get<std::string>());
            if (ref.empty()) ref = std::move(got);
            else same = same && got == ref;
        }
        std::size_t csvs = 0;
        for (const auto& [k, v] : ref) csvs += k.ends_with(".csv");
        ok = ok && same && !ref.empty();
        d += fmt("%s %s (%zu files, %zu csv); ", name.c_str(), same ? "identical" : "DIFFER", ref.size(), csvs);
    }
    fs::remove_all(root);
    return {ok, d + "runs: workers 1, 1, 3"};
}

} // namespace

int main(int argc, char** argv) {
    const std::map<std::string, std::pair<const char*, std::function<Outcome()>>> all{
        {"AC1", {"kernel identities", ac1}},     {"AC2", {"sampler fidelity", ac2}},
        {"AC3", {"tail law", ac3}},              {"AC4", {"Peyriere suite", ac4}},
        {"AC5", {"Poisson solver", ac5}},        {"AC6", {"inequality oracles", ac6}},
        {"AC7", {"BRW and cascade", ac7}},       {"AC8", {"modulus and gauge", ac8}},
        {"AC9", {"reproducibility", ac9}},
    };
    // runtime budgets in seconds; AC3's is stated for 8 workers and scales with fewer
    const std::map<std::string, double> budget{{"AC1", 1},    {"AC2", 120}, {"AC3", 1800}, {"AC4", 60}, {"AC5", 10},
                                               {"AC6", 600},  {"AC7", 300}, {"AC8", 1200}};
    std::vector<std::string> pick;
    for (int i = 1; i < argc; ++i) pick.emplace_back(argv[i]);
    if (pick.empty()) {
        for (const auto& [k, v] : all) pick.push_back(k);
    }
    int failures = 0;
    for (const auto& id : pick) {
        const auto it = all.find(id);
        if (it == all.end()) {
            std::fprintf(stderr, "unknown criterion %s\n", id.c_str());
            return 2;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = it->second.second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (const auto b = budget.find(id); b != budget.end()) {
            double limit = b->second;
            if (id == "AC3") limit *= std::max(1.0, 8.0 / workers());
            if (secs > limit) {
                o.pass = false;
                o.detail += fmt("; over runtime budget %.0fs", limit);
            }
        }
        std::printf("%s %s %s: %s (%.1fs)\n", id.c_str(), o.pass ? "PASS" : "FAIL", it->second.first, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures ? 1 : 0;
}
