#include "wt/functionals.hpp"

#include <cmath>

namespace wt {

bool backend_legal(FunctionalKind kind, WitnessBackend backend) {
    switch (kind) {
        case FunctionalKind::MMD:
            return backend == WitnessBackend::ClosedForm;
        case FunctionalKind::LinearLifted:
            return backend == WitnessBackend::ClosedForm;
        case FunctionalKind::KL:
            return backend == WitnessBackend::KDEScore;
        case FunctionalKind::LinearEntropyKL:
            return backend == WitnessBackend::KDEScore || backend == WitnessBackend::RKHSDual;
        case FunctionalKind::Chi2:
            return backend == WitnessBackend::RKHSDual;
    }
    return false;
}

std::string kind_name(FunctionalKind kind) {
    switch (kind) {
        case FunctionalKind::LinearLifted: return "linear_lifted";
        case FunctionalKind::LinearEntropyKL: return "linear_entropy_kl";
        case FunctionalKind::KL: return "kl";
        case FunctionalKind::Chi2: return "chi2";
        case FunctionalKind::MMD: return "mmd";
    }
    return "?";
}

std::string backend_name(WitnessBackend backend) {
    switch (backend) {
        case WitnessBackend::ClosedForm: return "closed_form";
        case WitnessBackend::KDEScore: return "kde_score";
        case WitnessBackend::RKHSDual: return "rkhs_dual";
    }
    return "?";
}

std::optional<FunctionalKind> parse_kind(const std::string& s) {
    if (s == "linear_lifted") return FunctionalKind::LinearLifted;
    if (s == "linear_entropy_kl") return FunctionalKind::LinearEntropyKL;
    if (s == "kl") return FunctionalKind::KL;
    if (s == "chi2") return FunctionalKind::Chi2;
    if (s == "mmd") return FunctionalKind::MMD;
    return std::nullopt;
}

std::optional<WitnessBackend> parse_backend(const std::string& s) {
    if (s == "closed_form") return WitnessBackend::ClosedForm;
    if (s == "kde_score") return WitnessBackend::KDEScore;
    if (s == "rkhs_dual") return WitnessBackend::RKHSDual;
    return std::nullopt;
}

void FunctionalSpec::validate() const {
    if (!backend_legal(kind, backend)) {
        throw ArgumentError("functional: backend " + backend_name(backend) +
                            " is not legal for kind " + kind_name(kind));
    }
    switch (kind) {
        case FunctionalKind::LinearLifted:
            require(static_cast<bool>(g.grad), "functional: linear_lifted requires g");
            break;
        case FunctionalKind::LinearEntropyKL:
            require(static_cast<bool>(g.grad), "functional: linear_entropy_kl requires g");
            require(tau > 0.0, "functional: tau must be positive");
            if (backend == WitnessBackend::KDEScore) {
                require(static_cast<bool>(prior_score.score),
                        "functional: linear_entropy_kl requires a prior score");
            } else {
                require(static_cast<bool>(prior_sampler),
                        "functional: rkhs_dual backend requires a prior sampler");
                require(static_cast<bool>(g.value),
                        "functional: rkhs_dual backend requires g values");
            }
            break;
        case FunctionalKind::KL:
            require(static_cast<bool>(target_score.score), "functional: kl requires a target score");
            break;
        case FunctionalKind::Chi2:
        case FunctionalKind::MMD:
            require(target_samples.rows() >= 1, "functional: requires target samples");
            break;
    }
}

namespace {

Kernel kde_kernel(const FunctionalSpec& spec, const Ensemble& e, const Kernel& k,
                  WitnessSolveInfo* info) {
    double h = spec.kde.bandwidth ? *spec.kde.bandwidth : silverman_bandwidth(e);
    if (info) info->kde_bandwidth = h;
    return Kernel(e.space, h, k.wrap_images());
}

}  // namespace

Witness solve_witness(const FunctionalSpec& spec, const Ensemble& e, const Kernel& k,
                      double lambda, uint64_t seed, WitnessSolveInfo* info,
                      const Vec* warm_start) {
    spec.validate();
    require(e.n() >= 1, "solve_witness: empty ensemble");

    switch (spec.kind) {
        case FunctionalKind::MMD: {
            Ensemble y;
            y.positions = spec.target_samples;
            y.space = e.space;
            return mmd_witness(e, y, k);
        }
        case FunctionalKind::LinearLifted:
            return lifted_witness(spec.g);
        case FunctionalKind::KL: {
            ScoreModel self = spec.self_score_override
                                  ? *spec.self_score_override
                                  : kde_score(e, kde_kernel(spec, e, k, info),
                                              spec.kde.leave_one_out);
            return kl_witness(spec.target_score, self);
        }
        case FunctionalKind::LinearEntropyKL: {
            if (spec.backend == WitnessBackend::KDEScore) {
                ScoreModel self = spec.self_score_override
                                      ? *spec.self_score_override
                                      : kde_score(e, kde_kernel(spec, e, k, info),
                                                  spec.kde.leave_one_out);
                return entropy_kl_witness(spec.g, spec.tau, spec.prior_score, self);
            }
            int m = spec.prior_sample_count > 0 ? spec.prior_sample_count : e.n();
            RowMat priors = spec.prior_sampler(m, seed);
            RepresenterWitness rw =
                solve_exp_dual(e.positions, spec.g, spec.tau, priors, k, lambda, spec.solver,
                               seed, warm_start);
            if (info) {
                info->converged = rw.converged;
                info->newton_iters = rw.iterations;
                info->coeffs = rw.coeffs();
                Vec fp = rw.values_at(e.positions);
                Vec fy = rw.values_at(priors);
                double mean_exp = 0.0;
                for (int i = 0; i < priors.rows(); ++i) {
                    mean_exp +=
                        std::exp(std::min((fy[i] - spec.g.value(priors.row(i))) / spec.tau, 700.0));
                }
                mean_exp /= priors.rows();
                info->dual_value = fp.mean() - spec.tau * mean_exp + spec.tau;
            }
            return rw.to_witness();
        }
        case FunctionalKind::Chi2: {
            RepresenterWitness rw =
                solve_chi2(e.positions, spec.target_samples, k, lambda, spec.solver, seed);
            if (info) {
                info->converged = rw.converged;
                info->coeffs = rw.coeffs();
                Vec fp = rw.values_at(e.positions);
                Vec fq = rw.values_at(spec.target_samples);
                info->dual_value = 2.0 * fp.mean() - fq.array().square().mean() - 1.0;
            }
            return rw.to_witness();
        }
    }
    throw ArgumentError("solve_witness: unknown functional kind");
}

double grad_norm_estimate(const Witness& w, const Ensemble& e) {
    require(e.n() >= 1, "grad_norm_estimate: empty ensemble");
    RowMat g = w.eval_grad(e.positions);
    if (!g.allFinite()) throw NumericalError("grad_norm_estimate: non-finite gradient");
    double acc = 0.0;
    for (int i = 0; i < g.rows(); ++i) acc += g.row(i).squaredNorm();
    return acc / e.n();
}

std::optional<double> objective_estimate(const FunctionalSpec& spec, const Ensemble& e,
                                         const Witness& w, const WitnessSolveInfo* info) {
    switch (spec.kind) {
        case FunctionalKind::MMD:
            // V-statistic MMD^2 equals the squared RKHS norm of the witness.
            if (w.rkhs_norm) return (*w.rkhs_norm) * (*w.rkhs_norm);
            return std::nullopt;
        case FunctionalKind::LinearLifted: {
            if (!w.has_value()) return std::nullopt;
            double acc = 0.0;
            for (int i = 0; i < e.n(); ++i) acc += w.value(e.positions.row(i));
            return acc / e.n();
        }
        case FunctionalKind::Chi2:
        case FunctionalKind::LinearEntropyKL:
            if (info && info->dual_value) return info->dual_value;
            return std::nullopt;
        case FunctionalKind::KL:
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace wt
