#pragma once

#include "wt/ensemble.hpp"
#include "wt/kernel.hpp"
#include "wt/witness.hpp"

namespace wt {

/// One unadjusted Langevin step: z <- z + gamma * score(z) + sqrt(2 gamma) xi
/// (ascent on the target log density). Torus mode wraps. `noise` threads the
/// noise stream; with_noise=false degenerates to a gradient ascent step.
Ensemble ula_step(const Ensemble& e, const ScoreModel& target, double gamma, Rng& noise,
                  bool with_noise = true);

/// One SVGD step:
/// x_i <- x_i + (eps/N) sum_j [ k(x_j, x_i) score(x_j) + grad_{x_j} k(x_j, x_i) ].
Ensemble svgd_step(const Ensemble& e, const ScoreModel& target, const Kernel& k, double eps);

}  // namespace wt
