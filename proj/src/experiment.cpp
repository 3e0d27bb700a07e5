#include "wt/experiment.hpp"

#include "wt/baselines.hpp"
#include "wt/diagnostics.hpp"
#include "wt/io.hpp"
#include "wt/oracle.hpp"
#include "wt/parallel.hpp"
#include "wt/transport.hpp"

#include <json.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

namespace wt {

namespace {

using nlohmann::json;

ScalarField make_objective_fn(const ExperimentConfig& cfg, const Space& space) {
    ScalarField g;
    const int d = space.dim;
    if (cfg.g_name == "zero") {
        g.value = [](const RowVec&) { return 0.0; };
        g.grad = [d](const RowVec&) { return RowVec(RowVec::Zero(d)); };
        g.hessian_bound = 0.0;
    } else if (cfg.g_name == "quadratic") {
        RowVec c = Eigen::Map<const RowVec>(cfg.g_center.data(), d);
        double s = cfg.g_scale;
        g.value = [c, s](const RowVec& x) { return 0.5 * s * (x - c).squaredNorm(); };
        g.grad = [c, s](const RowVec& x) { return RowVec(s * (x - c)); };
        g.hessian_bound = std::fabs(s);
    } else if (cfg.g_name == "double_well") {
        g.value = [](const RowVec& x) {
            double acc = 0.0;
            for (int j = 0; j < x.size(); ++j) {
                double t = x[j] * x[j] - 1.0;
                acc += t * t;
            }
            return acc;
        };
        g.grad = [](const RowVec& x) {
            RowVec out(x.size());
            for (int j = 0; j < x.size(); ++j) out[j] = 4.0 * x[j] * (x[j] * x[j] - 1.0);
            return out;
        };
        // curvature unbounded on R^d; the safeguard falls back to probes
    } else if (cfg.g_name == "cosine") {
        double period = space.is_torus() ? space.period : 1.0;
        double w = 2.0 * M_PI / period;
        double s = cfg.g_scale;
        g.value = [w, s](const RowVec& x) {
            double acc = 0.0;
            for (int j = 0; j < x.size(); ++j) acc += 1.0 - std::cos(w * x[j]);
            return s * acc;
        };
        g.grad = [w, s](const RowVec& x) {
            RowVec out(x.size());
            for (int j = 0; j < x.size(); ++j) out[j] = s * w * std::sin(w * x[j]);
            return out;
        };
        g.hessian_bound = std::fabs(s) * w * w;
    } else {
        throw ArgumentError("unknown objective function: " + cfg.g_name);
    }
    return g;
}

RowVec to_rowvec(const std::vector<double>& v) {
    return Eigen::Map<const RowVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

RowMat gaussian_draws(const RowVec& mean, const RowVec& sigma, int n, uint64_t seed,
                      uint64_t stream_idx) {
    Rng rng(seed, substream(StreamPurpose::TargetSamples, stream_idx));
    RowMat out(n, mean.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < mean.size(); ++j) out(i, j) = mean[j] + sigma[j] * rng.normal();
    }
    return out;
}

GridDensity gaussian_grid(const RowVec& mean, const RowVec& sigma, int points, int dim) {
    if (dim == 1) {
        GridDensity g;
        g.dim = 1;
        double lo = mean[0] - 8.5 * sigma[0], hi = mean[0] + 8.5 * sigma[0];
        g.x0[0] = lo;
        g.dx[0] = (hi - lo) / (points - 1);
        g.npts = {points, 1};
        g.values.resize(points);
        for (int i = 0; i < points; ++i) {
            double x = g.coord(0, i);
            g.values[i] = std::exp(-0.5 * std::pow((x - mean[0]) / sigma[0], 2));
        }
        g.normalize();
        return g;
    }
    GridDensity g;
    g.dim = 2;
    int pts = std::min(points, 256);
    for (int a = 0; a < 2; ++a) {
        double lo = mean[a] - 8.5 * sigma[a], hi = mean[a] + 8.5 * sigma[a];
        g.x0[a] = lo;
        g.dx[a] = (hi - lo) / (pts - 1);
        g.npts[a] = pts;
    }
    g.values.resize(static_cast<size_t>(pts) * pts);
    for (int i = 0; i < pts; ++i) {
        for (int j = 0; j < pts; ++j) {
            double x = g.coord(0, i), y = g.coord(1, j);
            g.at(i, j) = std::exp(-0.5 * std::pow((x - mean[0]) / sigma[0], 2) -
                                  0.5 * std::pow((y - mean[1]) / sigma[1], 2));
        }
    }
    g.normalize();
    return g;
}

struct TargetAssets {
    std::optional<ScoreModel> score;
    std::optional<RowMat> samples;
    std::optional<RowMat> null_samples;
    std::optional<GridDensity> grid;
};

std::string format_record_json(const IterationRecord& r) {
    json j;
    j["iter"] = r.iter;
    auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("objective", r.objective);
    j["grad_norm2"] = r.grad_norm2;
    j["alpha_used"] = r.alpha_used;
    put("witness_norm", r.witness_norm);
    put("hessian_bound", r.hessian_bound);
    put("mmd2_target", r.mmd2_target);
    put("w2_target", r.w2_target);
    put("grid_kl", r.grid_kl);
    put("bias_est", r.bias_est);
    put("wall_ms", r.wall_ms);
    return j.dump();
}

std::string snapshots_jsonl(const std::vector<std::pair<int, Ensemble>>& snaps) {
    std::ostringstream os;
    for (const auto& [iter, e] : snaps) {
        json j;
        j["iter"] = iter;
        j["n"] = e.n();
        j["d"] = e.dim();
        j["space"] = e.space.name();
        json pos = json::array();
        for (int i = 0; i < e.n(); ++i) {
            json row = json::array();
            for (int c = 0; c < e.dim(); ++c) row.push_back(e.positions(i, c));
            pos.push_back(std::move(row));
        }
        j["positions"] = std::move(pos);
        os << j.dump() << "\n";
    }
    return os.str();
}

std::vector<IterationRecord> run_baseline(const std::string& name, const ExperimentConfig& cfg,
                                          const Ensemble& init_ensemble, const ScoreModel& score,
                                          const Kernel& svgd_kernel, const DiagnosticsPlan& plan,
                                          const Kernel& mmd_kernel) {
    std::vector<IterationRecord> records;
    Ensemble e = init_ensemble;
    Rng noise(cfg.seed, substream(StreamPurpose::UlaNoise));
    const int big_k = cfg.iters;
    for (int k = 0;; ++k) {
        IterationRecord rec;
        rec.iter = k;
        RowMat s = score.eval_score(e.positions);
        double gn = 0.0;
        for (int i = 0; i < s.rows(); ++i) gn += s.row(i).squaredNorm();
        rec.grad_norm2 = gn / e.n();
        rec.alpha_used = name == "ula" ? cfg.ula_gamma : cfg.svgd_eps;
        if (plan.target_samples) {
            rec.mmd2_target = mmd_stats(e.positions, *plan.target_samples, mmd_kernel).v_stat;
        }
        records.push_back(rec);
        if (k == big_k) break;
        if (name == "ula") {
            e = ula_step(e, score, cfg.ula_gamma, noise);
        } else {
            e = svgd_step(e, score, svgd_kernel, cfg.svgd_eps);
        }
    }
    return records;
}

}  // namespace

void run_experiment(ExperimentConfig cfg, const RunOverrides& ov) {
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.out_dir) cfg.out_dir = *ov.out_dir;
    if (ov.mode) cfg.mode = *ov.mode;
    if (ov.backend) cfg.backend = *ov.backend;
    // Re-validate after overrides by round-tripping through the parser.
    cfg = parse_config_text(serialize_config(cfg), "<effective>");

    if (ov.repro) {
        set_serial_mode(true);
        simd::set_backend(simd::Backend::Scalar);
    }

    Space space = cfg.topology == "torus" ? Space::torus(cfg.dim, cfg.period)
                                          : Space::euclidean(cfg.dim);

    ScalarField g = make_objective_fn(cfg, space);

    // Prior score/sampler.
    ScoreModel prior_score;
    std::function<RowMat(int, uint64_t)> prior_sampler;
    std::function<double(double)> prior_log_1d;
    if (cfg.prior == "gaussian") {
        RowVec pm = to_rowvec(cfg.prior_mean), ps = to_rowvec(cfg.prior_sigma);
        prior_score = gaussian_score_model(pm, ps);
        prior_sampler = [space, pm, ps](int n, uint64_t seed) {
            return sample_init(space, GaussianInit{pm, ps}, n, seed,
                               substream(StreamPurpose::PriorSamples))
                .positions;
        };
        double m0 = pm[0], s0 = ps[0];
        prior_log_1d = [m0, s0](double x) {
            return -0.5 * std::pow((x - m0) / s0, 2) - std::log(s0) - 0.5 * std::log(2.0 * M_PI);
        };
    } else if (cfg.prior == "flat") {
        prior_score = flat_score_model(space.dim);
        prior_log_1d = [](double) { return 0.0; };
    } else if (cfg.prior == "uniform_torus") {
        prior_score = flat_score_model(space.dim);
        prior_sampler = [space](int n, uint64_t seed) {
            return sample_init(space, UniformTorusInit{}, n, seed,
                               substream(StreamPurpose::PriorSamples))
                .positions;
        };
    } else if (cfg.prior == "wrapped_gaussian") {
        RowVec pm = to_rowvec(cfg.prior_mean), ps = to_rowvec(cfg.prior_sigma);
        prior_score = wrapped_gaussian_score_model(space, pm, ps);
        prior_sampler = [space, pm, ps](int n, uint64_t seed) {
            return sample_init(space, WrappedGaussianInit{pm, ps}, n, seed,
                               substream(StreamPurpose::PriorSamples))
                .positions;
        };
    }

    // Init sampler.
    InitSampler init;
    if (cfg.init_sampler == "gaussian") {
        init = GaussianInit{to_rowvec(cfg.init_mean), to_rowvec(cfg.init_sigma)};
    } else if (cfg.init_sampler == "uniform_torus") {
        init = UniformTorusInit{};
    } else {
        init = WrappedGaussianInit{to_rowvec(cfg.init_mean), to_rowvec(cfg.init_sigma)};
    }

    // Target assets.
    TargetAssets target;
    int n_target = cfg.target_samples > 0 ? cfg.target_samples : cfg.n_particles;
    if (cfg.target_kind == "gaussian") {
        RowVec tm = to_rowvec(cfg.target_mean), ts = to_rowvec(cfg.target_sigma);
        target.score = gaussian_score_model(tm, ts);
        target.samples = gaussian_draws(tm, ts, n_target, cfg.seed, 0);
        if (cfg.null_mmd2) target.null_samples = gaussian_draws(tm, ts, n_target, cfg.seed, 1);
        if (space.dim <= 2) target.grid = gaussian_grid(tm, ts, cfg.grid_points, space.dim);
    } else if (cfg.target_kind == "gibbs") {
        auto g1 = [&g](double x) {
            RowVec q(1);
            q[0] = x;
            return g.value(q);
        };
        target.grid = gibbs_grid_density_1d(g1, cfg.tau, prior_log_1d, -3.0, 3.0,
                                            cfg.grid_points);
        target.samples = inverse_cdf_sample(*target.grid, n_target, cfg.seed);
        if (cfg.null_mmd2) {
            target.null_samples =
                inverse_cdf_sample(*target.grid, n_target, cfg.seed ^ 0xD1B54A32D192ED03ull);
        }
        ScoreModel sm;
        double tau = cfg.tau;
        ScalarField gf = g;
        ScoreModel pr = prior_score;
        sm.score = [gf, tau, pr](const RowVec& x) {
            return RowVec(-gf.grad(x) / tau + pr.score(x));
        };
        target.score = sm;
    }

    // Transport kernel: median heuristic over the initial solver basis
    // (init particles plus target samples) unless pinned.
    Ensemble probe = sample_init(space, init, cfg.n_particles, cfg.seed, 0);
    double kh = cfg.kernel_bandwidth;
    if (kh <= 0.0) {
        RowMat basis = probe.positions;
        if (target.samples) {
            RowMat both(basis.rows() + target.samples->rows(), basis.cols());
            both.topRows(basis.rows()) = basis;
            both.bottomRows(target.samples->rows()) = *target.samples;
            basis = std::move(both);
        }
        kh = Kernel::median_heuristic(basis, space);
    }
    Kernel kernel(space, kh, cfg.wrap_images);

    double mh = cfg.mmd_bandwidth;
    if (mh <= 0.0) {
        mh = target.samples ? Kernel::median_heuristic(*target.samples, space)
                            : kernel.bandwidth();
    }
    Kernel mmd_kernel(space, mh, cfg.wrap_images);

    // Functional spec.
    FunctionalSpec spec;
    spec.kind = *parse_kind(cfg.kind);
    spec.backend = *parse_backend(cfg.backend);
    spec.g = g;
    spec.tau = cfg.tau;
    spec.prior_score = prior_score;
    spec.prior_sampler = prior_sampler;
    spec.prior_sample_count = cfg.prior_samples;
    if (target.score) spec.target_score = *target.score;
    if (target.samples &&
        (spec.kind == FunctionalKind::Chi2 || spec.kind == FunctionalKind::MMD)) {
        spec.target_samples = *target.samples;
    }
    if (cfg.kde_bandwidth > 0.0) spec.kde.bandwidth = cfg.kde_bandwidth;
    spec.kde.leave_one_out = cfg.kde_leave_one_out;

    TransportConfig tcfg;
    tcfg.alpha = cfg.alpha;
    tcfg.iters = cfg.iters;
    tcfg.n_particles = cfg.n_particles;
    tcfg.lambda = cfg.lambda;
    tcfg.seed = cfg.seed;
    tcfg.mode = cfg.mode == "map" ? TransportConfig::Mode::MapComposition
                                  : TransportConfig::Mode::Direct;
    tcfg.safeguard = cfg.safeguard;
    tcfg.snapshot_every = cfg.snapshot_every;
    tcfg.grad_norm_tol = cfg.grad_norm_tol;
    tcfg.warm_start = cfg.warm_start;

    DiagnosticsPlan plan;
    plan.target_samples = target.samples;
    plan.mmd_kernel = mmd_kernel;
    plan.w2_every = cfg.w2_every;
    if (target.grid && cfg.grid_kl_every > 0) {
        plan.kl_grid = target.grid;
        plan.grid_kl_every = cfg.grid_kl_every;
    }
    plan.bias_every = cfg.bias_every;
    plan.record_wall = !ov.repro;

    ensure_directory(cfg.out_dir);

    RunResult result = tcfg.mode == TransportConfig::Mode::MapComposition
                           ? run_map_composition(tcfg, spec, kernel, init, space, plan)
                           : run_direct(tcfg, spec, kernel, init, space, plan);

    // metrics.csv
    {
        std::ostringstream os;
        write_metrics_csv(os, result.records);
        atomic_write_file(cfg.out_dir + "/metrics.csv", os.str());
    }

    // snapshots.jsonl (always contains at least the final ensemble)
    {
        auto snaps = result.snapshots;
        if (snaps.empty() || snaps.back().first != result.records.back().iter) {
            snaps.emplace_back(result.records.back().iter, result.final_ensemble);
        }
        atomic_write_file(cfg.out_dir + "/snapshots.jsonl", snapshots_jsonl(snaps));
    }

    if (target.grid) {
        std::ostringstream os;
        write_density_csv(os, *target.grid);
        atomic_write_file(cfg.out_dir + "/target_density.csv", os.str());
    }

    // Baselines on the same seed and initial ensemble.
    json baselines_json = json::object();
    if (!cfg.baselines.empty()) {
        ScoreModel bscore;
        if (cfg.baselines_exact_score) {
            bscore = *target.score;
        } else {
            Ensemble tgt;
            tgt.positions = *target.samples;
            tgt.space = space;
            bscore = kde_score(tgt, Kernel(space, silverman_bandwidth(tgt), cfg.wrap_images));
        }
        double sh = cfg.svgd_bandwidth > 0.0 ? cfg.svgd_bandwidth : kernel.bandwidth();
        Kernel svgd_kernel(space, sh, cfg.wrap_images);
        Ensemble shared_init = sample_init(space, init, cfg.n_particles, cfg.seed, 0);
        for (const auto& name : cfg.baselines) {
            auto recs = run_baseline(name, cfg, shared_init, bscore, svgd_kernel, plan,
                                     mmd_kernel);
            std::ostringstream os;
            write_metrics_csv(os, recs);
            atomic_write_file(cfg.out_dir + "/metrics_" + name + ".csv", os.str());
            json jb;
            if (recs.back().mmd2_target) jb["final_mmd2"] = *recs.back().mmd2_target;
            jb["iters"] = recs.back().iter;
            baselines_json[name] = jb;
        }
    }

    // summary.json
    json summary;
    summary["versions"] = {{"wtrans", "0.1.0"},
                           {"eigen", EIGEN_WORLD_VERSION * 10000 + EIGEN_MAJOR_VERSION * 100 +
                                         EIGEN_MINOR_VERSION},
                           {"simd_backend", simd::backend_name(simd::active_backend())}};
    summary["repro"] = ov.repro;
    summary["config"] = serialize_config(cfg);
    summary["mode"] = cfg.mode;
    json vt;
    vt["iterations"] = result.records.back().iter;
    vt["stopped_early"] = result.stopped_early;
    vt["final"] = json::parse(format_record_json(result.records.back()));
    std::vector<double> series;
    bool have_mmd = plan.target_samples.has_value();
    for (const auto& r : result.records) {
        if (have_mmd && r.mmd2_target) series.push_back(*r.mmd2_target);
    }
    if (!series.empty()) {
        RateFit rf = rate_fit(series, 5, std::min<int>(100, static_cast<int>(series.size()) - 1));
        json jr;
        jr["ok"] = rf.ok;
        if (rf.ok) {
            jr["rho"] = rf.rho;
            jr["plateau"] = rf.plateau;
            jr["residual"] = rf.residual;
        } else {
            jr["note"] = rf.note;
        }
        vt["rate_fit"] = jr;
    }
    summary["vt"] = vt;
    if (result.records.back().mmd2_target) {
        summary["mmd2_target"] = *result.records.back().mmd2_target;
    }
    if (target.samples && target.null_samples) {
        summary["mmd2_null"] =
            mmd_stats(*target.samples, *target.null_samples, mmd_kernel).v_stat;
    }
    summary["baselines"] = baselines_json;
    atomic_write_file(cfg.out_dir + "/summary.json", summary.dump(2) + "\n");

    if (!ov.quiet) {
        std::cerr << "wtrun: wrote " << cfg.out_dir << "/summary.json (iter "
                  << result.records.back().iter << ")\n";
    }
}

int run_experiment_main(ExperimentConfig cfg, const RunOverrides& ov) {
    try {
        run_experiment(std::move(cfg), ov);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace wt
