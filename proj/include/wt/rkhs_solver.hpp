#pragma once

#include "wt/common.hpp"
#include "wt/kernel.hpp"
#include "wt/witness.hpp"

#include <cstdint>
#include <variant>

namespace wt {

struct SolverOptions {
    double jitter_scale = 1e-9;  // relative to trace(K_ZZ)/m
    int jitter_retries = 3;
    int basis_cap = 2048;
    int max_newton_iters = 100;
    double coeff_grad_tol = 1e-8;
    int max_line_search = 50;
    double exp_arg_clip = 500.0;
};

/// Representer-theorem witness f(x) = sum_a c_a k(x, z_a).
class RepresenterWitness {
public:
    RepresenterWitness(RowMat basis, Vec coeffs, const Kernel& kernel);

    const RowMat& basis() const { return basis_; }
    const Vec& coeffs() const { return coeffs_; }
    const Kernel& kernel() const { return kernel_; }
    double rkhs_norm() const { return rkhs_norm_; }

    bool converged = true;
    int iterations = 0;
    double kkt_residual = 0.0;

    double value_at(const RowVec& x) const;
    Vec values_at(const RowMat& X) const;
    RowVec grad_at(const RowVec& x) const;
    RowMat grad_batch(const RowMat& X) const;

    Witness to_witness() const;

private:
    RowMat basis_;
    Vec coeffs_;
    Kernel kernel_;
    double rkhs_norm_;
};

/// Chi-squared inner dual: maximize (2/n) sum f(x_i) - (1/m) sum f(y_j)^2
/// - lambda ||f||_H^2 over the representer span of samples_p and samples_q.
/// Exact concave-quadratic maximizer via one regularized linear solve.
RepresenterWitness solve_chi2(const RowMat& samples_p, const RowMat& samples_q,
                              const Kernel& kernel, double lambda,
                              const SolverOptions& opts = {}, uint64_t seed = 0);

/// Exponential-conjugate dual for the entropy/KL-regularized linear objective:
/// maximize (1/n) sum f(x_i) - tau * mean_prior exp[(f - g)/tau] + tau
/// - lambda ||f||_H^2. Strictly concave in the coefficients; damped Newton
/// with backtracking.
RepresenterWitness solve_exp_dual(const RowMat& particles, const ScalarField& g, double tau,
                                  const RowMat& prior_samples, const Kernel& kernel,
                                  double lambda, const SolverOptions& opts = {},
                                  uint64_t seed = 0, const Vec* warm_start = nullptr);

struct Chi2Form {
    RowMat target_samples;
};
struct ExpForm {
    ScalarField g;
    double tau = 1.0;
    RowMat prior_samples;
};

struct DualProblem {
    RowMat sample_points;
    std::variant<Chi2Form, ExpForm> conjugate;
    double lambda = 0.0;
};

/// Unregularized dual value (1/n) sum f(x_i) - F*(f) for any evaluatable f.
/// Chi2 convention: 2 mean_p f - mean_q f^2 - 1. Exp convention:
/// mean_p f - tau mean_prior exp[(f-g)/tau] + tau.
double dual_objective(const DualProblem& problem,
                      const std::function<double(const RowVec&)>& f);

struct HessianBoundEstimate {
    double certified;  // d * second_derivative_bound * ||f||_H
    double empirical;  // max spectral norm of the witness Hessian over probes
};

/// Lipschitz bound for the witness gradient. `certified` follows the
/// Frobenius-norm chain through the kernel derivative bound; `empirical` is a
/// probe-point sharpening reported for diagnostics.
HessianBoundEstimate estimate_hessian_bound(const RepresenterWitness& w,
                                            const RowMat* probes = nullptr);

/// Default regularization schedule: 1e-3 * n^{-1/2}.
double default_lambda(int n);

}  // namespace wt
