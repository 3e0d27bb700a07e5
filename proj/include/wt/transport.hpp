#pragma once

#include "wt/diagnostics.hpp"
#include "wt/ensemble.hpp"
#include "wt/functionals.hpp"
#include "wt/kernel.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace wt {

struct TransportConfig {
    double alpha = 0.1;
    int iters = 100;        // K pushforward steps
    int n_particles = 100;  // N
    double lambda = 0.0;    // <= 0: default_lambda(N)
    uint64_t seed = 0;

    enum class Mode { Direct, MapComposition };
    Mode mode = Mode::Direct;

    /// Clamp the stepsize to 0.5 / hessian_bound each iteration. For witnesses
    /// without a certified bound the clamp uses a finite-difference estimate
    /// over probe particles.
    bool safeguard = true;
    double grad_norm_tol = 0.0;  // > 0: stop early when grad_norm2 < tol
    int snapshot_every = 0;      // > 0: keep ensembles every k iterations
    bool warm_start = true;      // Newton warm start across iterations

    void validate() const;
};

/// One composed-map step: push by exp_map(-alpha * grad f).
struct TransportStep {
    Witness witness;
    double alpha = 0.0;
};

/// T_0 = identity; T_{k+1} = exp(-alpha_k grad f_k) o T_k. Stored as the step
/// list; length() counts T_0.
struct TransportMapHistory {
    Space space;
    std::vector<TransportStep> steps;
    size_t length() const { return steps.size() + 1; }
};

/// Apply the composed map to points, one stored step at a time.
RowMat apply_history(const TransportMapHistory& h, const RowMat& points);

/// Per-iteration target-distance measurements taken by the loop.
struct DiagnosticsPlan {
    std::optional<RowMat> target_samples;
    std::optional<Kernel> mmd_kernel;  // defaults to the transport kernel
    int w2_every = 0;                  // 0 off; else every k iterations and at the end
    std::optional<GridDensity> kl_grid;
    double kl_kde_bandwidth = 0.0;  // 0: Silverman at evaluation time
    int grid_kl_every = 0;
    int bias_every = 0;
    bool record_wall = true;
};

struct RunResult {
    Ensemble final_ensemble;
    std::vector<IterationRecord> records;  // one row per visited iterate (0..K)
    std::vector<std::pair<int, Ensemble>> snapshots;
    TransportMapHistory history;
    bool stopped_early = false;
};

/// Direct particle transport: refit the witness on the current particles each
/// iteration and push them in place.
RunResult run_direct(const TransportConfig& cfg, const FunctionalSpec& spec, const Kernel& k,
                     const InitSampler& init, const Space& space,
                     const DiagnosticsPlan& plan = {});

/// Map-composition transport: each iteration draws fresh initial samples,
/// pushes them through the composed map so far, fits the witness on those, and
/// appends the step. The returned final ensemble is the canonical initial
/// draw replayed through the full history.
RunResult run_map_composition(const TransportConfig& cfg, const FunctionalSpec& spec,
                              const Kernel& k, const InitSampler& init, const Space& space,
                              const DiagnosticsPlan& plan = {});

}  // namespace wt
