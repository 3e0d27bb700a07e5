#pragma once

#include "wt/common.hpp"
#include "wt/ensemble.hpp"
#include "wt/kernel.hpp"
#include "wt/rkhs_solver.hpp"
#include "wt/witness.hpp"

#include <functional>
#include <optional>
#include <string>

namespace wt {

enum class FunctionalKind { LinearLifted, LinearEntropyKL, KL, Chi2, MMD };
enum class WitnessBackend { ClosedForm, KDEScore, RKHSDual };

bool backend_legal(FunctionalKind kind, WitnessBackend backend);
std::string kind_name(FunctionalKind kind);
std::string backend_name(WitnessBackend backend);
std::optional<FunctionalKind> parse_kind(const std::string& s);
std::optional<WitnessBackend> parse_backend(const std::string& s);

struct KdeOptions {
    std::optional<double> bandwidth;  // Silverman rule when unset
    bool leave_one_out = false;
};

/// One objective functional F bound to its conjugate form and witness solver.
struct FunctionalSpec {
    FunctionalKind kind = FunctionalKind::MMD;
    WitnessBackend backend = WitnessBackend::ClosedForm;

    ScalarField g;      // LinearLifted, LinearEntropyKL
    double tau = 1.0;   // LinearEntropyKL
    ScoreModel prior_score;                              // LinearEntropyKL
    std::function<RowMat(int, uint64_t)> prior_sampler;  // LinearEntropyKL + RKHSDual
    int prior_sample_count = 0;                          // 0: use ensemble size
    ScoreModel target_score;  // KL
    RowMat target_samples;    // Chi2 (q samples), MMD (Y)
    KdeOptions kde;
    /// When set, used instead of the KDE self-score for KL /
    /// LinearEntropyKL (exact-score ablation; makes the witness
    /// ensemble-independent).
    std::optional<ScoreModel> self_score_override;
    SolverOptions solver;

    void validate() const;
};

struct WitnessSolveInfo {
    std::optional<double> dual_value;
    bool converged = true;
    int newton_iters = 0;
    std::optional<double> kde_bandwidth;
    Vec coeffs;  // RKHSDual warm-start carry
};

/// Solve the inner dual problem for the current ensemble and return the
/// witness that drives the pushforward.
Witness solve_witness(const FunctionalSpec& spec, const Ensemble& e, const Kernel& k,
                      double lambda, uint64_t seed, WitnessSolveInfo* info = nullptr,
                      const Vec* warm_start = nullptr);

/// Riemannian gradient-norm estimate: (1/N) sum ||grad f(x_i)||^2.
double grad_norm_estimate(const Witness& w, const Ensemble& e);

/// Plug-in objective estimate (1/N) sum w(x_i) - F*(w) where both terms are
/// computable; nullopt for score backends that lack values.
std::optional<double> objective_estimate(const FunctionalSpec& spec, const Ensemble& e,
                                         const Witness& w,
                                         const WitnessSolveInfo* info = nullptr);

}  // namespace wt
