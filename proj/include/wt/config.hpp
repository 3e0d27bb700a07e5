#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wt {

/// Carries every problem found while parsing/validating a config file.
struct ConfigError : std::runtime_error {
    explicit ConfigError(std::vector<std::string> errs);
    std::vector<std::string> errors;
};

/// Parsed experiment description. Plain data; cross-field legality is checked
/// at parse time with messages naming the offending key.
struct ExperimentConfig {
    // [space]
    std::string topology = "euclidean";  // euclidean | torus
    int dim = 1;
    double period = 1.0;

    // [functional]
    std::string kind = "mmd";
    std::string backend;  // empty: default for kind
    std::string g_name = "zero";
    std::vector<double> g_center;  // quadratic center (broadcast scalar ok)
    double g_scale = 1.0;
    double tau = 1.0;
    std::string prior;  // gaussian | flat | uniform_torus | wrapped_gaussian
    std::vector<double> prior_mean;
    std::vector<double> prior_sigma;
    int prior_samples = 0;  // rkhs_dual prior draw count, 0 = n_particles
    double kde_bandwidth = 0.0;  // 0 = Silverman
    bool kde_leave_one_out = false;

    // [kernel]
    double kernel_bandwidth = 0.0;  // 0 = median heuristic
    int wrap_images = 3;

    // [transport]
    double alpha = 0.1;
    int iters = 100;
    int n_particles = 100;
    double lambda = 0.0;  // 0 = 1e-3 n^{-1/2}
    std::string mode = "direct";  // direct | map
    bool safeguard = true;
    int snapshot_every = 0;
    double grad_norm_tol = 0.0;
    bool warm_start = true;

    // [init]
    std::string init_sampler = "gaussian";  // gaussian | uniform_torus | wrapped_gaussian
    std::vector<double> init_mean;
    std::vector<double> init_sigma;

    // [target]
    std::string target_kind = "none";  // none | gaussian | gibbs
    std::vector<double> target_mean;
    std::vector<double> target_sigma;
    int target_samples = 0;  // 0 = n_particles
    double mmd_bandwidth = 0.0;  // 0 = median on target samples
    bool null_mmd2 = false;
    int w2_every = 0;
    int grid_kl_every = 0;
    int grid_points = 2048;

    // [baselines]
    std::vector<std::string> baselines;  // subset of {ula, svgd}
    double ula_gamma = 0.01;
    double svgd_eps = 0.1;
    double svgd_bandwidth = 0.0;  // 0 = median
    bool baselines_exact_score = true;

    // [run]
    uint64_t seed = 0;
    std::string out_dir = "out";
    int bias_every = 0;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical serialization; parse_config_text(serialize_config(c)) yields an
/// equal config (round-trip contract used by the summary echo).
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace wt
