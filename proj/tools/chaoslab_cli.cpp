// chaoslab command line: one subcommand per suite plus merge/export of ensemble stores.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "chaoslab/chaoslab.hpp"

namespace {

using namespace chaoslab;

struct Globals {
    std::optional<std::uint64_t> seed;
    unsigned workers = 0;
    std::optional<std::string> out;
    std::optional<std::string> config;
};

struct Overrides {
    std::optional<std::size_t> replicas;
    std::optional<std::size_t> m;
    std::optional<std::string> field;
    std::optional<std::string> measure;
    std::optional<unsigned> level;
    std::optional<double> t;
    std::vector<std::string> tests;
    std::optional<std::string> family;
    std::optional<double> sigma;
    std::optional<double> s;
};

ExperimentConfig resolve(const std::string& experiment, const Globals& g, const Overrides& o) {
    json j = json::object();
    if (g.config) {
        auto is = io::open_in(*g.config);
        try {
            j = json::parse(is);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(*g.config + ": " + e.what());
        }
        if (!j.is_object()) throw ConfigError(*g.config + ": top level must be an object");
    }
    j["experiment"] = experiment;
    if (g.seed) j["seed"] = *g.seed;
    if (g.out) j["out"] = *g.out;
    if (o.replicas) j["replicas"] = *o.replicas;
    if (o.level) j["level"] = *o.level;
    if (o.m || o.field || o.t) {
        json& f = j["field"];
        if (!f.is_object()) f = json::object();
        if (o.m) f["m"] = *o.m;
        if (o.field) f["kind"] = *o.field;
        if (o.t) f["t"] = *o.t;
    }
    if (o.measure) {
        json& mj = j["measure"];
        if (!mj.is_object()) mj = json::object();
        mj["kind"] = *o.measure;
    }
    if (!o.tests.empty()) j["oracles"]["tests"] = o.tests;
    if (o.family || o.sigma || o.s) {
        json& p = j["poisson"];
        if (!p.is_object()) p = json::object();
        if (o.family) p["family"] = *o.family;
        if (o.sigma) p["sigma"] = *o.sigma;
        if (o.s) p["s"] = *o.s;
    }
    return parse_config(j);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chaoslab: critical lognormal chaos laboratory"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "master seed")->expected(1);
    app.add_option("--workers", g.workers, "worker threads (default: CHAOSLAB_WORKERS or all cores)");
    app.add_option("--out", g.out, "output directory (merge/export: output path)");
    app.add_option("--config", g.config, "JSON experiment config")->check(CLI::ExistingFile);

    Overrides o;
    std::string chosen;
    for (const char* name : {"sample", "measure", "tail", "poisson", "oracles", "cascade", "modulus"}) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " suite");
        sub->fallthrough();
        sub->add_option("--replicas,-N", o.replicas, "replica count");
        sub->add_option("--m", o.m, "grid size (power of two)");
        sub->add_option("--field", o.field, "exact-X or star-Y");
        sub->add_option("--t", o.t, "field horizon (default log m)");
        sub->add_option("--measure", o.measure, "subcritical, derivative or seneta-heyde");
        sub->add_option("--level", o.level, "dyadic level for max masses");
        if (std::string(name) == "oracles") sub->add_option("--tests", o.tests, "subset of tests")->delimiter(',');
        if (std::string(name) == "poisson") {
            sub->add_option("--family", o.family, "psi0 or smooth-step");
            sub->add_option("--sigma", o.sigma, "std of tau");
            sub->add_option("--s", o.s, "smooth-step width");
        }
        sub->callback([&chosen, name] { chosen = name; });
    }

    std::vector<std::string> merge_inputs;
    auto* merge_cmd = app.add_subcommand("merge", "merge ensemble stores with disjoint stream ids");
    merge_cmd->fallthrough();
    merge_cmd->add_option("inputs", merge_inputs, "store files")->required()->check(CLI::ExistingFile);
    merge_cmd->callback([&chosen] { chosen = "merge"; });

    std::string export_input;
    std::string export_format = "csv";
    auto* export_cmd = app.add_subcommand("export", "export a store as CSV or JSON summary");
    export_cmd->fallthrough();
    export_cmd->add_option("store", export_input, "store file")->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--format", export_format, "csv or json-summary")->check(CLI::IsMember({"csv", "json-summary"}));
    export_cmd->callback([&chosen] { chosen = "export"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorKind::Config);
    }

    try {
        if (chosen == "merge") {
            if (!g.out) throw ConfigError("merge needs --out <store path>");
            Ensemble acc;
            for (const auto& p : merge_inputs) acc = merge(acc, io::load_store(p));
            io::save_store(*g.out, acc);
            std::cout << "merged " << merge_inputs.size() << " stores, N = " << acc.size() << "\n";
        } else if (chosen == "export") {
            const auto e = io::load_store(export_input);
            if (export_format == "csv") {
                if (g.out) {
                    auto os = io::open_out(*g.out);
                    io::write_csv(os, e);
                } else {
                    io::write_csv(std::cout, e);
                }
            } else {
                const std::string text = io::summary(e).dump(2) + "\n";
                if (g.out) io::write_text(*g.out, text);
                else std::cout << text;
            }
        } else {
            const auto cfg = resolve(chosen, g, o);
            run_experiment(cfg, g.workers);
            std::cout << chosen << ": wrote " << cfg.out << "\n";
        }
    } catch (const chaoslab::Error& e) {
        std::cerr << "chaoslab: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        // stray std exceptions come from numerics (bad_alloc, domain errors)
        std::cerr << "chaoslab: " << e.what() << "\n";
        return static_cast<int>(ErrorKind::Numeric);
    }
    return 0;
}
