#pragma once

#include "wt/common.hpp"
#include "wt/diagnostics.hpp"

#include <cstdint>
#include <functional>

namespace wt {

using Fn1d = std::function<double(double)>;

/// Normalized Gibbs density exp(-g(x)/tau) * exp(prior_log(x)) on a 1-D grid.
/// The range starts from [lo_hint, hi_hint] and expands until the edge density
/// falls below 1e-12 of the peak; trapezoid normalization.
GridDensity gibbs_grid_density_1d(const Fn1d& g, double tau, const Fn1d& prior_log,
                                  double lo_hint, double hi_hint, int points = 4096);

/// 2-D variant on a tensor grid (points per axis).
GridDensity gibbs_grid_density_2d(const std::function<double(double, double)>& g, double tau,
                                  const std::function<double(double, double)>& prior_log,
                                  double lo_hint, double hi_hint, int points = 256);

/// Draw n samples from a 1-D density table by exact inversion of the
/// piecewise-constant cell CDF. Deterministic given seed.
RowMat inverse_cdf_sample(const GridDensity& table, int n, uint64_t seed);

/// Density of [exp(t * grad u)]_# p at x: solves y + t u'(y) = x by a
/// monotone root-find and applies the 1-D change of variables
/// p(y) / |1 + t u''(y)|. Requires |t| * sup|u''| < 1.
double pushforward_density_1d(const Fn1d& p, const Fn1d& u_grad, const Fn1d& u_hess, double t,
                              double x);

/// Plot-friendly CSV: "x,density" rows (1-D) or "x,y,density" rows (2-D).
void write_density_csv(std::ostream& os, const GridDensity& table);

}  // namespace wt
