#pragma once

#include "wt/config.hpp"

#include <optional>
#include <string>

namespace wt {

struct RunOverrides {
    std::optional<uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> mode;     // direct | map
    std::optional<std::string> backend;  // functional backend name
    bool repro = false;
    bool quiet = false;
};

/// Run one experiment: transport plus configured baselines on shared seeds;
/// writes metrics.csv, per-baseline metrics, snapshots.jsonl and summary.json
/// under out_dir. Throws ConfigError / NumericalError / IoError.
void run_experiment(ExperimentConfig cfg, const RunOverrides& ov = {});

/// Exception-to-exit-code wrapper: 0 ok, 2 config, 3 numerical, 4 io.
int run_experiment_main(ExperimentConfig cfg, const RunOverrides& ov = {});

}  // namespace wt
