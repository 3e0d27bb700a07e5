#include "wt/rkhs_solver.hpp"

#include "wt/parallel.hpp"
#include "wt/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <thread>
#include <vector>

namespace wt {

namespace {

RowMat vstack(const RowMat& a, const RowMat& b) {
    RowMat out(a.rows() + b.rows(), a.cols());
    out.topRows(a.rows()) = a;
    out.bottomRows(b.rows()) = b;
    return out;
}

RowMat cap_basis(RowMat z, int cap, uint64_t seed) {
    const int n = static_cast<int>(z.rows());
    if (cap <= 0 || n <= cap) return z;
    Rng rng(seed, substream(StreamPurpose::BasisSubsample));
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < cap; ++i) {
        int j = i + static_cast<int>(rng.uniform_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    RowMat out(cap, z.cols());
    for (int i = 0; i < cap; ++i) out.row(i) = z.row(idx[i]);
    return out;
}

// U * U^T / U.cols(), optionally split into two column blocks computed on two
// threads; the blocks are combined in a fixed order, so the result does not
// depend on scheduling.
Eigen::MatrixXd syrk_mean(const Eigen::MatrixXd& u) {
    const Eigen::Index m = u.rows();
    const Eigen::Index c = u.cols();
    if (!serial_mode() && max_threads() >= 2 && c >= 1024 && m >= 256) {
        Eigen::Index half = c / 2;
        Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(m, m);
        Eigen::MatrixXd c2 = Eigen::MatrixXd::Zero(m, m);
        std::thread worker([&] {
            c1.selfadjointView<Eigen::Lower>().rankUpdate(u.leftCols(half));
        });
        c2.selfadjointView<Eigen::Lower>().rankUpdate(u.rightCols(c - half));
        worker.join();
        Eigen::MatrixXd out = c1 + c2;
        out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
        return out / static_cast<double>(c);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
    out.selfadjointView<Eigen::Lower>().rankUpdate(u);
    out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
    return out / static_cast<double>(c);
}

}  // namespace

double default_lambda(int n) {
    require(n >= 1, "default_lambda: n must be >= 1");
    return 1e-3 / std::sqrt(static_cast<double>(n));
}

RepresenterWitness::RepresenterWitness(RowMat basis, Vec coeffs, const Kernel& kernel)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)), kernel_(kernel) {
    require(basis_.rows() == coeffs_.size(), "RepresenterWitness: size mismatch");
    Eigen::MatrixXd kzz = kernel_.gram(basis_, basis_);
    double q = coeffs_.dot(0.5 * (kzz + kzz.transpose()) * coeffs_);
    rkhs_norm_ = std::sqrt(std::max(q, 0.0));
}

double RepresenterWitness::value_at(const RowVec& x) const {
    double s = 0.0;
    auto spec = kernel_.rbf_spec();
    simd::ops().rbf_row(spec, x.data(), basis_.data(), static_cast<int>(basis_.rows()),
                        coeffs_.data(), nullptr, &s, nullptr);
    return s;
}

Vec RepresenterWitness::values_at(const RowMat& X) const {
    Vec out(X.rows());
    auto spec = kernel_.rbf_spec();
    parallel_for(static_cast<int>(X.rows()), [&](int i) {
        double s = 0.0;
        simd::ops().rbf_row(spec, X.row(i).data(), basis_.data(),
                            static_cast<int>(basis_.rows()), coeffs_.data(), nullptr, &s,
                            nullptr);
        out[i] = s;
    });
    return out;
}

RowVec RepresenterWitness::grad_at(const RowVec& x) const {
    RowVec g = RowVec::Zero(x.size());
    auto spec = kernel_.rbf_spec();
    simd::ops().rbf_row(spec, x.data(), basis_.data(), static_cast<int>(basis_.rows()),
                        coeffs_.data(), nullptr, nullptr, g.data());
    return g;
}

RowMat RepresenterWitness::grad_batch(const RowMat& X) const {
    RowMat out = RowMat::Zero(X.rows(), X.cols());
    auto spec = kernel_.rbf_spec();
    parallel_for(static_cast<int>(X.rows()), [&](int i) {
        RowVec g = RowVec::Zero(X.cols());
        simd::ops().rbf_row(spec, X.row(i).data(), basis_.data(),
                            static_cast<int>(basis_.rows()), coeffs_.data(), nullptr, nullptr,
                            g.data());
        out.row(i) = g;
    });
    return out;
}

Witness RepresenterWitness::to_witness() const {
    auto self = std::make_shared<RepresenterWitness>(*this);
    Witness w;
    w.value = [self](const RowVec& x) { return self->value_at(x); };
    w.grad = [self](const RowVec& x) { return self->grad_at(x); };
    w.grad_batch = [self](const RowMat& X) { return self->grad_batch(X); };
    w.rkhs_norm = rkhs_norm_;
    w.hessian_bound =
        kernel_.space().dim * kernel_.second_derivative_bound() * rkhs_norm_;
    return w;
}

RepresenterWitness solve_chi2(const RowMat& samples_p, const RowMat& samples_q,
                              const Kernel& kernel, double lambda, const SolverOptions& opts,
                              uint64_t seed) {
    require(samples_p.rows() >= 1 && samples_q.rows() >= 1, "solve_chi2: empty sample set");
    require(samples_p.cols() == samples_q.cols(), "solve_chi2: dimension mismatch");
    require(lambda > 0.0, "solve_chi2: lambda must be positive");

    RowMat z = cap_basis(vstack(samples_p, samples_q), opts.basis_cap, seed);
    const int m = static_cast<int>(z.rows());
    const int n = static_cast<int>(samples_p.rows());

    Eigen::MatrixXd kzz = kernel.gram(z, z);
    kzz = 0.5 * (kzz + kzz.transpose()).eval();
    Eigen::MatrixXd kzq = kernel.gram(z, samples_q);
    Eigen::MatrixXd a = syrk_mean(kzq) + lambda * kzz;
    Vec rhs = kernel.gram(z, samples_p) * Vec::Ones(n) / n;

    double base_jitter = opts.jitter_scale * kzz.trace() / m;
    double jitter = base_jitter;
    double rhs_scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    for (int attempt = 0; attempt <= opts.jitter_retries; ++attempt) {
        Eigen::MatrixXd aj = a;
        aj.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(aj);
        if (llt.info() == Eigen::Success) {
            Vec c = llt.solve(rhs);
            Vec resid = aj * c - rhs;
            if (resid.lpNorm<Eigen::Infinity>() > 1e-10 * rhs_scale) {
                c += llt.solve(-resid);  // one refinement step
                resid = aj * c - rhs;
            }
            double kkt = resid.lpNorm<Eigen::Infinity>();
            if (kkt < 1e-8 * rhs_scale && c.allFinite()) {
                RepresenterWitness w(std::move(z), std::move(c), kernel);
                w.kkt_residual = kkt;
                w.iterations = 1;
                return w;
            }
        }
        jitter *= 10.0;
    }
    throw NumericalError("solve_chi2: singular system after jitter escalation");
}

RepresenterWitness solve_exp_dual(const RowMat& particles, const ScalarField& g, double tau,
                                  const RowMat& prior_samples, const Kernel& kernel,
                                  double lambda, const SolverOptions& opts, uint64_t seed,
                                  const Vec* warm_start) {
    require(particles.rows() >= 1, "solve_exp_dual: empty particle set");
    require(prior_samples.rows() >= 1, "solve_exp_dual: need prior samples");
    require(tau > 0.0, "solve_exp_dual: tau must be positive");
    require(lambda > 0.0, "solve_exp_dual: lambda must be positive");

    RowMat z = cap_basis(vstack(particles, prior_samples), opts.basis_cap, seed);
    const int m = static_cast<int>(z.rows());
    const int n = static_cast<int>(particles.rows());
    const int big_m = static_cast<int>(prior_samples.rows());

    Eigen::MatrixXd kzz = kernel.gram(z, z);
    kzz = 0.5 * (kzz + kzz.transpose()).eval();
    Vec b = kernel.gram(z, particles) * Vec::Ones(n) / n;
    Eigen::MatrixXd kmz = kernel.gram(prior_samples, z);  // big_m x m
    Vec g_prior(big_m);
    for (int i = 0; i < big_m; ++i) g_prior[i] = g.value(prior_samples.row(i));

    const double clip = opts.exp_arg_clip;
    bool clip_active = false;
    auto weights = [&](const Vec& c, bool* clipped) -> Vec {
        Vec arg = (kmz * c - g_prior) / tau;
        bool any = false;
        for (int i = 0; i < arg.size(); ++i) {
            if (arg[i] > clip) {
                arg[i] = clip;
                any = true;
            }
        }
        if (clipped) *clipped = any;
        return arg.array().exp().matrix();
    };
    auto objective = [&](const Vec& c, const Vec& w) -> double {
        return b.dot(c) - tau * w.mean() + tau - lambda * c.dot(kzz * c);
    };

    Vec c = Vec::Zero(m);
    if (warm_start && warm_start->size() == m) c = *warm_start;
    Vec w = weights(c, &clip_active);
    double obj = objective(c, w);

    double jitter0 = opts.jitter_scale * kzz.trace() / m;
    bool converged = false;
    int iters = 0;
    double grad_norm = 0.0;

    for (iters = 0; iters < opts.max_newton_iters; ++iters) {
        Vec grad = b - kmz.transpose() * w / big_m - 2.0 * lambda * (kzz * c);
        grad_norm = grad.norm();
        if (grad_norm < opts.coeff_grad_tol) {
            converged = true;
            break;
        }
        // neg_hess = (1/(M tau)) Kmz' diag(w) Kmz + 2 lambda Kzz, SPD.
        Eigen::MatrixXd bwt =
            (w.array().sqrt().matrix().asDiagonal() * kmz).transpose();  // m x M
        Eigen::MatrixXd neg_hess = syrk_mean(bwt) / tau + 2.0 * lambda * kzz;
        double jitter = jitter0;
        Eigen::LLT<Eigen::MatrixXd> llt;
        for (int attempt = 0;; ++attempt) {
            Eigen::MatrixXd hj = neg_hess;
            hj.diagonal().array() += jitter;
            llt.compute(hj);
            if (llt.info() == Eigen::Success) break;
            if (attempt >= opts.jitter_retries) {
                throw NumericalError("solve_exp_dual: Hessian factorization failed");
            }
            jitter *= 10.0;
        }
        Vec step = llt.solve(grad);
        double slope = grad.dot(step);
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < opts.max_line_search; ++ls) {
            Vec cand = c + t * step;
            bool clipped = false;
            Vec wc = weights(cand, &clipped);
            double cand_obj = objective(cand, wc);
            if (std::isfinite(cand_obj) && cand_obj >= obj + 1e-4 * t * slope) {
                c = std::move(cand);
                w = std::move(wc);
                obj = cand_obj;
                clip_active = clipped;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            throw NumericalError("solve_exp_dual: line search failed after " +
                                 std::to_string(opts.max_line_search) + " halvings");
        }
    }

    if (converged && clip_active) {
        throw NumericalError("solve_exp_dual: exponent clip active at convergence");
    }

    RepresenterWitness out(std::move(z), std::move(c), kernel);
    out.converged = converged;
    out.iterations = iters;
    out.kkt_residual = grad_norm;
    return out;
}

double dual_objective(const DualProblem& problem,
                      const std::function<double(const RowVec&)>& f) {
    require(static_cast<bool>(f), "dual_objective: witness has no value");
    const RowMat& xs = problem.sample_points;
    require(xs.rows() >= 1, "dual_objective: empty sample set");
    double mean_p = 0.0;
    for (int i = 0; i < xs.rows(); ++i) mean_p += f(xs.row(i));
    mean_p /= xs.rows();

    if (std::holds_alternative<Chi2Form>(problem.conjugate)) {
        const auto& form = std::get<Chi2Form>(problem.conjugate);
        require(form.target_samples.rows() >= 1, "dual_objective: empty target samples");
        double mean_q2 = 0.0;
        for (int i = 0; i < form.target_samples.rows(); ++i) {
            double v = f(form.target_samples.row(i));
            mean_q2 += v * v;
        }
        mean_q2 /= form.target_samples.rows();
        return 2.0 * mean_p - mean_q2 - 1.0;
    }
    const auto& form = std::get<ExpForm>(problem.conjugate);
    require(form.prior_samples.rows() >= 1, "dual_objective: empty prior samples");
    double mean_exp = 0.0;
    for (int i = 0; i < form.prior_samples.rows(); ++i) {
        RowVec y = form.prior_samples.row(i);
        double arg = (f(y) - form.g.value(y)) / form.tau;
        if (arg > 700.0) throw NumericalError("dual_objective: exp overflow");
        mean_exp += std::exp(arg);
    }
    mean_exp /= form.prior_samples.rows();
    return mean_p - form.tau * mean_exp + form.tau;
}

HessianBoundEstimate estimate_hessian_bound(const RepresenterWitness& w,
                                            const RowMat* probes) {
    const Kernel& k = w.kernel();
    const int d = k.space().dim;
    double certified = d * k.second_derivative_bound() * w.rkhs_norm();

    RowMat pts = probes ? *probes : hessian_probes(w.basis(), 256);
    double empirical = 0.0;
    if (w.coeffs().size() == 0 || pts.rows() == 0) {
        return {certified, 0.0};
    }
    if (!k.space().is_torus()) {
        const double inv_h2 = 1.0 / (k.bandwidth() * k.bandwidth());
        const RowMat& z = w.basis();
        Eigen::MatrixXd hess(d, d);
        for (int p = 0; p < pts.rows(); ++p) {
            hess.setZero();
            for (int a = 0; a < z.rows(); ++a) {
                RowVec u = z.row(a) - pts.row(p);
                double kv = std::exp(-0.5 * u.squaredNorm() * inv_h2);
                double ck = w.coeffs()[a] * kv;
                hess += ck * (inv_h2 * inv_h2 * u.transpose() * u -
                              inv_h2 * Eigen::MatrixXd::Identity(d, d));
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
            empirical = std::max(empirical,
                                 es.eigenvalues().cwiseAbs().maxCoeff());
        }
    } else {
        empirical = empirical_hessian_bound(w.to_witness(), pts, k.space());
    }
    return {certified, empirical};
}

}  // namespace wt
