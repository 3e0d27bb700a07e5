#pragma once

#include "wt/common.hpp"
#include "wt/rng.hpp"
#include "wt/space.hpp"

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

namespace wt {

/// Uniformly weighted particle cloud approximating a probability measure.
/// Immutable by convention: updates return new ensembles.
struct Ensemble {
    RowMat positions;  // n x d
    Space space;
    std::vector<uint64_t> seed_lineage;

    int n() const { return static_cast<int>(positions.rows()); }
    int dim() const { return static_cast<int>(positions.cols()); }
};

struct GaussianInit {
    RowVec mean;
    RowVec sigma;  // per-axis standard deviation, entries >= 0
};
struct UniformTorusInit {};
struct WrappedGaussianInit {
    RowVec mean;
    RowVec sigma;  // entries > 0
};
using InitSampler = std::variant<GaussianInit, UniformTorusInit, WrappedGaussianInit>;

/// Draw n i.i.d. particles from the named initial law. Deterministic given
/// (seed, stream_index); the draw order is row-major so the result is
/// independent of any parallel settings. stream_index 0 is the canonical
/// initialization stream; other indices give fresh independent draws.
Ensemble sample_init(const Space& space, const InitSampler& sampler, int n, uint64_t seed,
                     uint64_t stream_index = 0);

/// Batch gradient field: rows of the result are the field at each input row.
using GradField = std::function<RowMat(const RowMat&)>;

/// One pushforward step: x_i <- exp_map(x_i, -alpha * field(x_i)).
Ensemble push(const Ensemble& e, const GradField& field, double alpha);

/// Arithmetic mean of f over the particles, summed left to right.
double empirical_mean(const Ensemble& e, const std::function<double(const RowVec&)>& f);

}  // namespace wt
