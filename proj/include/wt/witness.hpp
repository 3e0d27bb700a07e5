#pragma once

#include "wt/common.hpp"
#include "wt/ensemble.hpp"
#include "wt/kernel.hpp"

#include <functional>
#include <optional>

namespace wt {

/// Dual witness f: an evaluatable scalar field whose negative gradient drives
/// the particle pushforward. Score-only backends leave `value` empty.
struct Witness {
    std::function<double(const RowVec&)> value;  // may be empty
    std::function<RowVec(const RowVec&)> grad;
    std::function<RowMat(const RowMat&)> grad_batch;
    std::optional<double> rkhs_norm;
    std::optional<double> hessian_bound;

    bool has_value() const { return static_cast<bool>(value); }
    RowMat eval_grad(const RowMat& X) const;
};

/// Log-density / score pair. `log_density` may be empty (score-only models).
struct ScoreModel {
    std::function<double(const RowVec&)> log_density;  // may be empty
    std::function<RowVec(const RowVec&)> score;
    std::function<RowMat(const RowMat&)> score_batch;  // may be empty; falls back to score

    RowMat eval_score(const RowMat& X) const;
};

/// Objective function g with gradient; the optional Hessian bound feeds the
/// transport stepsize safeguard for witnesses built from g.
struct ScalarField {
    std::function<double(const RowVec&)> value;
    std::function<RowVec(const RowVec&)> grad;
    std::optional<double> hessian_bound;
};

/// MMD witness f = mean-embedding(P) - mean-embedding(Y). Comes with its RKHS
/// norm (the biased squared MMD) and a certified witness-gradient Lipschitz
/// bound.
Witness mmd_witness(const Ensemble& p, const Ensemble& y, const Kernel& k);

/// Kernel density score: s(x) = sum_i grad1 k(x, x_i) / sum_i k(x, x_i).
/// log_density is the log KDE with the normalizing constant dropped.
/// With leave_one_out, batch evaluations at the support itself exclude each
/// particle's own kernel term.
ScoreModel kde_score(const Ensemble& e, const Kernel& k, bool leave_one_out = false);

/// Witness gradient for the entropy/KL-regularized linear objective:
/// grad f(x) = grad g(x) + tau * (s_p(x) - s_prior(x)). Value is undefined
/// (the score backend does not know normalizers).
Witness entropy_kl_witness(const ScalarField& g, double tau, const ScoreModel& prior,
                           const ScoreModel& ensemble_score);

/// KL-to-target witness gradient: s_p(x) - s_target(x).
Witness kl_witness(const ScoreModel& target, const ScoreModel& ensemble_score);

/// Lifted linear objective: the witness is g itself, ensemble-independent.
Witness lifted_witness(const ScalarField& g);

// Score-model builders shared by targets, priors and baselines.
ScoreModel gaussian_score_model(const RowVec& mean, const RowVec& sigma);
ScoreModel flat_score_model(int dim);
ScoreModel wrapped_gaussian_score_model(const Space& space, const RowVec& mean,
                                        const RowVec& sigma, int images = 5);

/// Silverman-rule KDE bandwidth, isotropic: 1.06 * sigma_hat * n^{-1/(d+4)}
/// with sigma_hat the RMS of per-axis spreads (circular spread on the torus).
double silverman_bandwidth(const Ensemble& e);

/// Max spectral norm over probe rows of the finite-difference Jacobian of the
/// witness gradient. Used as the stepsize-safeguard bound for witnesses that
/// carry no certified Hessian bound.
double empirical_hessian_bound(const Witness& w, const RowMat& probes, const Space& space,
                               double fd_step = 1e-4);

/// Probe subset for Hessian estimation: all rows up to a cap, then a strided
/// subsample plus the per-axis extreme rows.
RowMat hessian_probes(const RowMat& positions, int cap = 512);

}  // namespace wt
