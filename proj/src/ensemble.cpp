#include "wt/ensemble.hpp"

#include <cmath>
#include <string>

namespace wt {

Ensemble sample_init(const Space& space, const InitSampler& sampler, int n, uint64_t seed,
                     uint64_t stream_index) {
    require(n >= 1, "sample_init: n must be >= 1");
    const int d = space.dim;
    RowMat pos(n, d);
    Rng rng(seed, substream(StreamPurpose::Init, stream_index));

    if (std::holds_alternative<GaussianInit>(sampler)) {
        const auto& g = std::get<GaussianInit>(sampler);
        require(g.mean.size() == d && g.sigma.size() == d, "sample_init: gaussian params dim mismatch");
        require((g.sigma.array() >= 0.0).all(), "sample_init: gaussian sigma must be >= 0");
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                pos(i, j) = g.mean[j] + g.sigma[j] * rng.normal();
            }
        }
        if (space.is_torus()) pos = space.wrap(std::move(pos));
    } else if (std::holds_alternative<UniformTorusInit>(sampler)) {
        require(space.is_torus(), "sample_init: uniform_torus requires a torus space");
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) pos(i, j) = space.period * rng.uniform();
        }
    } else {
        const auto& g = std::get<WrappedGaussianInit>(sampler);
        require(space.is_torus(), "sample_init: wrapped_gaussian requires a torus space");
        require(g.mean.size() == d && g.sigma.size() == d,
                "sample_init: wrapped_gaussian params dim mismatch");
        require((g.sigma.array() > 0.0).all(), "sample_init: wrapped_gaussian sigma must be > 0");
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                pos(i, j) = space.wrap_coord(g.mean[j] + g.sigma[j] * rng.normal());
            }
        }
    }

    Ensemble e;
    e.positions = std::move(pos);
    e.space = space;
    e.seed_lineage = {seed};
    return e;
}

Ensemble push(const Ensemble& e, const GradField& field, double alpha) {
    require(alpha > 0.0 && std::isfinite(alpha), "push: alpha must be positive");
    RowMat g = field(e.positions);
    require(g.rows() == e.positions.rows() && g.cols() == e.positions.cols(),
            "push: gradient field shape mismatch");
    for (int i = 0; i < e.n(); ++i) {
        if (!g.row(i).allFinite()) {
            throw NumericalError("push: non-finite gradient at particle " + std::to_string(i));
        }
    }
    Ensemble out;
    out.space = e.space;
    out.seed_lineage = e.seed_lineage;
    out.positions = e.positions - alpha * g;
    if (e.space.is_torus()) out.positions = e.space.wrap(std::move(out.positions));
    return out;
}

double empirical_mean(const Ensemble& e, const std::function<double(const RowVec&)>& f) {
    require(e.n() >= 1, "empirical_mean: empty ensemble");
    double acc = 0.0;
    for (int i = 0; i < e.n(); ++i) {
        double v = f(e.positions.row(i));
        if (!std::isfinite(v)) {
            throw NumericalError("empirical_mean: non-finite value at particle " +
                                 std::to_string(i));
        }
        acc += v;
    }
    return acc / e.n();
}

}  // namespace wt
