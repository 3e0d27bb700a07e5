// Experiment runner: parse a config, run transport and baselines, emit
// metrics.csv / snapshots.jsonl / summary.json.

#include "wt/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"wtrun - particle transport benchmark runner"};

    std::string config_path;
    std::string out_dir, mode, backend;
    uint64_t seed = 0;
    bool repro = false, quiet = false;

    app.add_option("--config", config_path, "Path to experiment config file")->required();
    auto* seed_opt = app.add_option("--seed", seed, "Override run.seed");
    auto* out_opt = app.add_option("--out-dir", out_dir, "Override run.out_dir");
    auto* mode_opt =
        app.add_option("--mode", mode, "Override transport.mode (direct|map)");
    auto* backend_opt =
        app.add_option("--backend", backend, "Override functional.backend");
    app.add_flag("--repro", repro, "Deterministic reductions (serial, scalar kernels)");
    app.add_flag("--quiet", quiet, "Suppress progress output");

    CLI11_PARSE(app, argc, argv);

    wt::ExperimentConfig cfg;
    try {
        cfg = wt::parse_config_file(config_path);
    } catch (const wt::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    wt::RunOverrides ov;
    if (seed_opt->count() > 0) ov.seed = seed;
    if (out_opt->count() > 0) ov.out_dir = out_dir;
    if (mode_opt->count() > 0) ov.mode = mode;
    if (backend_opt->count() > 0) ov.backend = backend;
    ov.repro = repro;
    ov.quiet = quiet;

    return wt::run_experiment_main(std::move(cfg), ov);
}
