#include "boedflows/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace boedflows;

namespace {

KeyValueConfig load_with_overrides(const std::string& path, const std::vector<std::string>& sets) {
    KeyValueConfig cfg = path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
    for (const auto& s : sets) cfg.apply_override(s);
    return cfg;
}

int cmd_run(const std::string& config, const std::vector<std::string>& sets, const std::string& output) {
    KeyValueConfig cfg = load_with_overrides(config, sets);
    if (!output.empty()) cfg.set("output", output);
    const ExperimentSpec spec = ExperimentSpec::from_config(cfg);
    const ExperimentReport report = run_experiment(spec);
    for (const auto& r : report.rows) {
        if (r.ok())
            std::printf("%-18s m=%-3zu seed=%-3lld eig=%.6f se=%.6f  %.0f ms\n", r.method.c_str(), r.m,
                        static_cast<long long>(r.seed), r.eig, r.se, r.wallclock_ms);
        else
            std::printf("%-18s m=%-3zu seed=%-3lld FAILED: %s\n", r.method.c_str(), r.m,
                        static_cast<long long>(r.seed), r.status.c_str());
    }
    for (const auto& a : report.aggregates)
        if (a.ok()) std::printf("mean %-13s m=%-3zu eig=%.6f se=%.6f\n", a.method.c_str(), a.m, a.eig, a.se);
    std::printf("wrote %s\n", spec.output_dir.c_str());
    return report.failed() == report.rows.size() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batch experimental design by Wasserstein gradient flows"};
    app.require_subcommand(1);

    std::string config, output;
    std::vector<std::string> sets;
    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
    run->add_option("--set", sets, "key=value override (repeatable)");
    run->add_option("--output", output, "output directory");

    std::string design_path, model_name = "", score_config;
    std::size_t n_outer = 1000, n_inner = 2000, replications = 1;
    std::uint64_t seed = 0;
    bool exact = false, do_repair = false;
    std::vector<std::string> score_sets;
    auto* score = app.add_subcommand("score", "score a saved design");
    score->add_option("design", design_path, "design json")->required()->check(CLI::ExistingFile);
    score->add_option("--model", model_name, "model name")->required();
    score->add_option("--n-outer", n_outer);
    score->add_option("--n-inner", n_inner);
    score->add_option("--replications", replications);
    score->add_option("--seed", seed);
    score->add_flag("--exact", exact, "closed-form utility where available");
    score->add_flag("--repair", do_repair, "repair infeasible designs instead of rejecting them");
    score->add_option("--config", score_config, "config with model overrides");
    score->add_option("--set", score_sets, "key=value override (repeatable)");

    std::string land_model = "toy1d", land_out, land_config;
    std::size_t grid = 2001, nodes = 200;
    std::vector<std::string> land_sets;
    auto* land = app.add_subcommand("landscape", "quadrature EIG curve of the toy model");
    land->add_option("--model", land_model)->check(CLI::IsMember({"toy1d"}));
    land->add_option("--grid", grid);
    land->add_option("--nodes", nodes);
    land->add_option("--out", land_out, "csv path (default stdout)");
    land->add_option("--config", land_config);
    land->add_option("--set", land_sets);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config, sets, output);
        if (*score) {
            const KeyValueConfig cfg = load_with_overrides(score_config, score_sets);
            ModelPtr model = make_model(model_name, cfg);
            DesignBatch design = load_design(design_path);
            if (design.dim() != model->design_dim())
                throw ConfigError("design dimension does not match model " + model_name);
            design.set_constraint(model->constraint());
            if (!is_feasible(design)) {
                if (!do_repair) throw ConfigError("design is infeasible for " + model_name + " (use --repair)");
                apply_constraint(design);
            }
            EigEstimate est;
            if (exact) {
                est = make_oracle(model, design.size(), 1, 1, GradientRandomness::Frozen, 0, true)->estimate(design);
            } else if (replications > 1) {
                est = eig_nmc_replicated(model, design, n_outer, n_inner, seed, replications);
            } else {
                est = eig_nmc(model, design, n_outer, n_inner, seed);
            }
            std::printf("eig %.12g\nse %.12g\n", est.value, est.std_error);
            return 0;
        }
        if (*land) {
            const KeyValueConfig cfg = load_with_overrides(land_config, land_sets);
            auto model = std::dynamic_pointer_cast<const Toy1DModel>(make_model(land_model, cfg));
            const auto curve = toy_landscape(*model, grid, nodes);
            std::ofstream file;
            if (!land_out.empty()) {
                file.open(land_out);
                if (!file) throw ConfigError("cannot write " + land_out);
            }
            std::ostream& os = land_out.empty() ? std::cout : file;
            os.precision(12);
            os << "xi,eig\n";
            for (const auto& [x, v] : curve) os << x << ',' << v << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
