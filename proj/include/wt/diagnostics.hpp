#pragma once

#include "wt/common.hpp"
#include "wt/ensemble.hpp"
#include "wt/functionals.hpp"
#include "wt/kernel.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

namespace wt {

struct MmdStats {
    double v_stat = 0.0;               // biased, diagonal-inclusive; >= 0
    std::optional<double> u_stat;      // unbiased; needs >= 2 points per set
};

/// Squared-MMD estimators between two point sets under kernel k.
MmdStats mmd_stats(const RowMat& X, const RowMat& Y, const Kernel& k);

/// Exact second-order Wasserstein distance between two equal-size empirical
/// measures (N <= 512) via an exact assignment solve on the squared-distance
/// cost matrix. Torus metric in torus mode.
double exact_w2(const RowMat& X, const RowMat& Y, const Space& space);

/// Normalized density table on a regular 1-D or 2-D grid.
struct GridDensity {
    int dim = 1;
    std::array<double, 2> x0{{0.0, 0.0}};
    std::array<double, 2> dx{{1.0, 1.0}};
    std::array<int, 2> npts{{0, 1}};
    std::vector<double> values;  // row-major [i0 * npts[1] + i1]

    double cell() const { return dim == 1 ? dx[0] : dx[0] * dx[1]; }
    double coord(int axis, int i) const { return x0[axis] + dx[axis] * i; }
    double& at(int i, int j = 0) { return values[static_cast<size_t>(i) * npts[1] + j]; }
    double at(int i, int j = 0) const { return values[static_cast<size_t>(i) * npts[1] + j]; }
    /// Scale values so that sum(values) * cell == 1.
    void normalize();
};

/// KL(p_hat || target) with p_hat the KDE of the ensemble evaluated on the
/// target's grid; both sides renormalized on the grid.
double grid_kl(const Ensemble& e, const GridDensity& target, double kde_bandwidth);

/// Grid KL between two density tables on the same grid (both renormalized).
double grid_kl_tables(const GridDensity& p, const GridDensity& q);

struct RateFit {
    bool ok = false;
    double rho = 0.0;
    double plateau = 0.0;
    double residual = 0.0;  // RMS misfit in original units
    std::string note;
};

/// Least-squares fit of e_k ~ plateau + A * rho^k over series indices
/// [lo, hi]. Soft failure (ok=false) instead of errors.
RateFit rate_fit(const std::vector<double>& series, int lo, int hi);

/// Split-half witness disagreement: fit witnesses on each half of the
/// ensemble and return (1/N) sum_i ||grad f_A(x_i) - grad f_B(x_i)||^2 / 2.
double gradient_bias_estimate(const FunctionalSpec& spec, const Ensemble& e, const Kernel& k,
                              double lambda, uint64_t seed);

struct IterationRecord {
    int iter = 0;
    std::optional<double> objective;
    double grad_norm2 = 0.0;
    double alpha_used = 0.0;
    std::optional<double> witness_norm;
    std::optional<double> hessian_bound;
    std::optional<double> mmd2_target;
    std::optional<double> w2_target;
    std::optional<double> grid_kl;
    std::optional<double> bias_est;
    std::optional<double> wall_ms;
};

/// CSV schema: iter,objective,grad_norm2,alpha_used,witness_norm,
/// hessian_bound,mmd2_target,w2_target,grid_kl,bias_est,wall_ms.
/// Unavailable fields are written as empty strings; header always emitted.
void write_metrics_csv(std::ostream& os, const std::vector<IterationRecord>& records);

}  // namespace wt
