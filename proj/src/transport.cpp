#include "wt/transport.hpp"

#include "wt/parallel.hpp"
#include "wt/rkhs_solver.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace wt {

void TransportConfig::validate() const {
    require(alpha > 0.0 && std::isfinite(alpha), "transport.alpha must be positive");
    require(iters >= 0, "transport.iters must be >= 0");
    require(n_particles >= 1, "transport.n_particles must be >= 1");
    require(grad_norm_tol >= 0.0, "transport.grad_norm_tol must be >= 0");
    require(snapshot_every >= 0, "transport.snapshot_every must be >= 0");
}

RowMat apply_history(const TransportMapHistory& h, const RowMat& points) {
    RowMat pts = points;
    for (const auto& step : h.steps) {
        RowMat g = step.witness.eval_grad(pts);
        if (!g.allFinite()) {
            throw NumericalError("apply_history: non-finite gradient during replay");
        }
        pts -= step.alpha * g;
        if (h.space.is_torus()) pts = h.space.wrap(std::move(pts));
    }
    return pts;
}

namespace {

uint64_t iter_seed(uint64_t seed, int k) {
    return seed + 0x9E3779B97F4A7C15ull * static_cast<uint64_t>(k + 1);
}

RunResult run_loop(const TransportConfig& cfg, const FunctionalSpec& spec, const Kernel& kern,
                   const InitSampler& init, const Space& space, const DiagnosticsPlan& plan,
                   bool map_mode) {
    cfg.validate();
    spec.validate();
    const int big_k = cfg.iters;
    const double lambda = cfg.lambda > 0.0 ? cfg.lambda : default_lambda(cfg.n_particles);

    RunResult result;
    result.history.space = space;

    Ensemble e = sample_init(space, init, cfg.n_particles, cfg.seed, 0);
    const Kernel& mmd_kern = plan.mmd_kernel ? *plan.mmd_kernel : kern;

    Vec warm;
    for (int k = 0;; ++k) {
        if (map_mode && k > 0) {
            Ensemble fresh = sample_init(space, init, cfg.n_particles, cfg.seed,
                                         static_cast<uint64_t>(k));
            fresh.positions = apply_history(result.history, fresh.positions);
            e = std::move(fresh);
        }
        if (!e.positions.allFinite()) {
            throw NumericalError("transport: non-finite particle positions at iteration " +
                                 std::to_string(k));
        }

        auto t0 = std::chrono::steady_clock::now();
        WitnessSolveInfo info;
        Witness w;
        try {
            w = solve_witness(spec, e, kern, lambda, iter_seed(cfg.seed, k), &info,
                              (cfg.warm_start && warm.size() > 0) ? &warm : nullptr);
        } catch (const NumericalError& err) {
            throw NumericalError("transport iteration " + std::to_string(k) + ": " +
                                 err.what());
        }
        if (cfg.warm_start && info.coeffs.size() > 0) warm = info.coeffs;

        double gn = grad_norm_estimate(w, e);

        IterationRecord rec;
        rec.iter = k;
        rec.objective = objective_estimate(spec, e, w, &info);
        rec.grad_norm2 = gn;
        rec.witness_norm = w.rkhs_norm;

        double alpha_k = cfg.alpha;
        std::optional<double> hbound = w.hessian_bound;
        if (cfg.safeguard) {
            if (!hbound) {
                hbound = empirical_hessian_bound(w, hessian_probes(e.positions), space);
            }
            if (*hbound > 0.0) alpha_k = std::min(cfg.alpha, 0.5 / *hbound);
        }
        rec.alpha_used = alpha_k;
        rec.hessian_bound = hbound;

        if (plan.target_samples) {
            rec.mmd2_target = mmd_stats(e.positions, *plan.target_samples, mmd_kern).v_stat;
            bool due = plan.w2_every > 0 && (k % plan.w2_every == 0 || k == big_k);
            if (due && plan.target_samples->rows() == e.n() && e.n() <= 512) {
                rec.w2_target = exact_w2(e.positions, *plan.target_samples, space);
            }
        }
        if (plan.kl_grid && plan.grid_kl_every > 0 &&
            (k % plan.grid_kl_every == 0 || k == big_k)) {
            double h = plan.kl_kde_bandwidth > 0.0 ? plan.kl_kde_bandwidth
                                                   : silverman_bandwidth(e);
            rec.grid_kl = grid_kl(e, *plan.kl_grid, h);
        }
        if (plan.bias_every > 0 && (k % plan.bias_every == 0 || k == big_k)) {
            rec.bias_est = gradient_bias_estimate(spec, e, kern, lambda, iter_seed(cfg.seed, k));
        }
        if (plan.record_wall) {
            auto t1 = std::chrono::steady_clock::now();
            rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        result.records.push_back(rec);

        if (cfg.snapshot_every > 0 && (k % cfg.snapshot_every == 0 || k == big_k)) {
            result.snapshots.emplace_back(k, e);
        }

        if (k == big_k) break;
        if (cfg.grad_norm_tol > 0.0 && gn < cfg.grad_norm_tol) {
            result.stopped_early = true;
            break;
        }

        result.history.steps.push_back(TransportStep{w, alpha_k});
        if (!map_mode) {
            e = push(
                e, [&w](const RowMat& pts) { return w.eval_grad(pts); }, alpha_k);
        }
    }

    if (map_mode) {
        Ensemble canonical = sample_init(space, init, cfg.n_particles, cfg.seed, 0);
        canonical.positions = apply_history(result.history, canonical.positions);
        result.final_ensemble = std::move(canonical);
    } else {
        result.final_ensemble = std::move(e);
    }
    return result;
}

}  // namespace

RunResult run_direct(const TransportConfig& cfg, const FunctionalSpec& spec, const Kernel& k,
                     const InitSampler& init, const Space& space, const DiagnosticsPlan& plan) {
    return run_loop(cfg, spec, k, init, space, plan, false);
}

RunResult run_map_composition(const TransportConfig& cfg, const FunctionalSpec& spec,
                              const Kernel& k, const InitSampler& init, const Space& space,
                              const DiagnosticsPlan& plan) {
    require(cfg.mode == TransportConfig::Mode::MapComposition,
            "run_map_composition: cfg.mode must be map_composition");
    return run_loop(cfg, spec, k, init, space, plan, true);
}

}  // namespace wt
