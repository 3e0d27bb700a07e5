#include "wt/baselines.hpp"

#include "wt/parallel.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace wt {

Ensemble ula_step(const Ensemble& e, const ScoreModel& target, double gamma, Rng& noise,
                  bool with_noise) {
    require(gamma > 0.0 && std::isfinite(gamma), "ula_step: gamma must be positive");
    RowMat s = target.eval_score(e.positions);
    for (int i = 0; i < e.n(); ++i) {
        if (!s.row(i).allFinite()) {
            throw NumericalError("ula_step: non-finite score at particle " + std::to_string(i));
        }
    }
    double noise_scale = with_noise ? std::sqrt(2.0 * gamma) : 0.0;
    Ensemble out;
    out.space = e.space;
    out.seed_lineage = e.seed_lineage;
    out.positions = e.positions + gamma * s;
    // Noise drawn in row-major order so the stream consumption is fixed.
    for (int i = 0; i < e.n(); ++i) {
        for (int j = 0; j < e.dim(); ++j) {
            out.positions(i, j) += noise_scale * noise.normal();
        }
    }
    if (e.space.is_torus()) out.positions = e.space.wrap(std::move(out.positions));
    return out;
}

Ensemble svgd_step(const Ensemble& e, const ScoreModel& target, const Kernel& k, double eps) {
    require(eps > 0.0 && std::isfinite(eps), "svgd_step: eps must be positive");
    const int n = e.n();
    const int d = e.dim();
    RowMat scores = target.eval_score(e.positions);
    for (int i = 0; i < n; ++i) {
        if (!scores.row(i).allFinite()) {
            throw NumericalError("svgd_step: non-finite score at particle " + std::to_string(i));
        }
    }
    // Column copies so the weighted row kernels see contiguous weights.
    std::vector<std::vector<double>> score_cols(d, std::vector<double>(n));
    for (int j = 0; j < d; ++j) {
        for (int i = 0; i < n; ++i) score_cols[j][i] = scores(i, j);
    }

    auto spec = k.rbf_spec();
    RowMat phi = RowMat::Zero(n, d);
    const RowMat& pts = e.positions;
    parallel_for(n, [&](int i) {
        const double* q = pts.row(i).data();
        // Attraction: sum_j k(x_j, x_i) * score(x_j), one weighted sum per axis.
        for (int a = 0; a < d; ++a) {
            double s = 0.0;
            simd::ops().rbf_row(spec, q, pts.data(), n, score_cols[a].data(), nullptr, &s,
                                nullptr);
            phi(i, a) = s;
        }
        // Repulsion: sum_j grad_{x_j} k(x_j, x_i) = -sum_j grad_1 k(x_i, x_j).
        RowVec rep = RowVec::Zero(d);
        simd::ops().rbf_row(spec, q, pts.data(), n, nullptr, nullptr, nullptr, rep.data());
        phi.row(i) -= rep;
    });

    Ensemble out;
    out.space = e.space;
    out.seed_lineage = e.seed_lineage;
    out.positions = e.positions + (eps / n) * phi;
    if (e.space.is_torus()) out.positions = e.space.wrap(std::move(out.positions));
    return out;
}

}  // namespace wt
