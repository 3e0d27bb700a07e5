#include "wt/witness.hpp"

#include "wt/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

namespace wt {

RowMat Witness::eval_grad(const RowMat& X) const {
    if (grad_batch) return grad_batch(X);
    RowMat out(X.rows(), X.cols());
    for (int i = 0; i < X.rows(); ++i) out.row(i) = grad(X.row(i));
    return out;
}

RowMat ScoreModel::eval_score(const RowMat& X) const {
    if (score_batch) return score_batch(X);
    RowMat out(X.rows(), X.cols());
    for (int i = 0; i < X.rows(); ++i) out.row(i) = score(X.row(i));
    return out;
}

namespace {

// Weighted mean of the Gram block: (1/(nm)) * sum_ij k(x_i, z_j), accumulated
// per row and reduced in row order so the result is schedule-independent.
double mean_kernel_block(const simd::RbfSpec& spec, const RowMat& X, const RowMat& Z) {
    const int n = static_cast<int>(X.rows());
    const int m = static_cast<int>(Z.rows());
    std::vector<double> row_sums(n, 0.0);
    parallel_for(n, [&](int i) {
        double s = 0.0;
        simd::ops().rbf_row(spec, X.row(i).data(), Z.data(), m, nullptr, nullptr, &s, nullptr);
        row_sums[i] = s;
    });
    double total = 0.0;
    for (double s : row_sums) total += s;
    return total / (static_cast<double>(n) * static_cast<double>(m));
}

}  // namespace

Witness mmd_witness(const Ensemble& p, const Ensemble& y, const Kernel& k) {
    require(p.n() >= 1 && y.n() >= 1, "mmd_witness: empty ensemble");
    require(p.space.topology == y.space.topology && p.space.dim == y.space.dim,
            "mmd_witness: space mismatch");
    auto xs = std::make_shared<RowMat>(p.positions);
    auto ys = std::make_shared<RowMat>(y.positions);
    auto spec = k.rbf_spec();
    const double inv_n = 1.0 / p.n();
    const double inv_m = 1.0 / y.n();

    double norm2 = mean_kernel_block(spec, *xs, *xs) + mean_kernel_block(spec, *ys, *ys) -
                   2.0 * mean_kernel_block(spec, *xs, *ys);
    double norm = std::sqrt(std::max(norm2, 0.0));

    Witness w;
    w.rkhs_norm = norm;
    w.hessian_bound = k.space().dim * k.second_derivative_bound() * norm;
    w.value = [xs, ys, spec, inv_n, inv_m](const RowVec& q) {
        double sp = 0.0, sy = 0.0;
        simd::ops().rbf_row(spec, q.data(), xs->data(), static_cast<int>(xs->rows()), nullptr,
                            nullptr, &sp, nullptr);
        simd::ops().rbf_row(spec, q.data(), ys->data(), static_cast<int>(ys->rows()), nullptr,
                            nullptr, &sy, nullptr);
        return inv_n * sp - inv_m * sy;
    };
    w.grad = [xs, ys, spec, inv_n, inv_m](const RowVec& q) {
        RowVec gp = RowVec::Zero(q.size()), gy = RowVec::Zero(q.size());
        simd::ops().rbf_row(spec, q.data(), xs->data(), static_cast<int>(xs->rows()), nullptr,
                            nullptr, nullptr, gp.data());
        simd::ops().rbf_row(spec, q.data(), ys->data(), static_cast<int>(ys->rows()), nullptr,
                            nullptr, nullptr, gy.data());
        return RowVec(inv_n * gp - inv_m * gy);
    };
    w.grad_batch = [xs, ys, spec, inv_n, inv_m](const RowMat& X) {
        RowMat out = RowMat::Zero(X.rows(), X.cols());
        const int d = static_cast<int>(X.cols());
        parallel_for(static_cast<int>(X.rows()), [&](int i) {
            double gp[16];
            double gy[16];
            std::vector<double> gp_big, gy_big;
            double* gpp = gp;
            double* gyp = gy;
            if (d > 16) {
                gp_big.assign(d, 0.0);
                gy_big.assign(d, 0.0);
                gpp = gp_big.data();
                gyp = gy_big.data();
            } else {
                std::fill(gpp, gpp + d, 0.0);
                std::fill(gyp, gyp + d, 0.0);
            }
            simd::ops().rbf_row(spec, X.row(i).data(), xs->data(), static_cast<int>(xs->rows()),
                                nullptr, nullptr, nullptr, gpp);
            simd::ops().rbf_row(spec, X.row(i).data(), ys->data(), static_cast<int>(ys->rows()),
                                nullptr, nullptr, nullptr, gyp);
            for (int j = 0; j < d; ++j) out(i, j) = inv_n * gpp[j] - inv_m * gyp[j];
        });
        return out;
    };
    return w;
}

ScoreModel kde_score(const Ensemble& e, const Kernel& k, bool leave_one_out) {
    require(e.n() >= 2, "kde_score: need at least 2 particles");
    auto support = std::make_shared<RowMat>(e.positions);
    auto spec = k.rbf_spec();
    const double self_val = k.self_value();
    const double floor = 1e-300;
    const int n = e.n();
    const int d = e.dim();

    auto score_one = [support, spec, floor, d](const RowVec& q, bool drop_self,
                                               double self_val_) {
        double s = 0.0;
        RowVec g = RowVec::Zero(d);
        simd::ops().rbf_row(spec, q.data(), support->data(), static_cast<int>(support->rows()),
                            nullptr, nullptr, &s, g.data());
        if (drop_self) s -= self_val_;  // self gradient term is exactly zero
        if (!(s > floor)) {
            std::ostringstream os;
            os << "kde_score: density underflow at query (";
            for (int j = 0; j < q.size(); ++j) os << (j ? "," : "") << q[j];
            os << ")";
            throw NumericalError(os.str());
        }
        return RowVec((1.0 / s) * g);
    };

    ScoreModel m;
    m.log_density = [support, spec, floor, n](const RowVec& q) {
        double s = 0.0;
        simd::ops().rbf_row(spec, q.data(), support->data(), static_cast<int>(support->rows()),
                            nullptr, nullptr, &s, nullptr);
        if (!(s > floor)) throw NumericalError("kde_score: density underflow in log_density");
        return std::log(s) - std::log(static_cast<double>(n));
    };
    m.score = [score_one](const RowVec& q) { return score_one(q, false, 0.0); };
    m.score_batch = [support, score_one, leave_one_out, self_val](const RowMat& X) {
        bool self_query = leave_one_out && X.rows() == support->rows() &&
                          X.cols() == support->cols() && X == *support;
        RowMat out(X.rows(), X.cols());
        parallel_for(static_cast<int>(X.rows()), [&](int i) {
            out.row(i) = score_one(X.row(i), self_query, self_val);
        });
        return out;
    };
    return m;
}

Witness entropy_kl_witness(const ScalarField& g, double tau, const ScoreModel& prior,
                           const ScoreModel& ensemble_score) {
    require(tau > 0.0, "entropy_kl_witness: tau must be positive");
    require(static_cast<bool>(prior.score), "entropy_kl_witness: missing prior score");
    require(static_cast<bool>(ensemble_score.score) || static_cast<bool>(ensemble_score.score_batch),
            "entropy_kl_witness: missing ensemble score");
    Witness w;
    w.grad = [g, tau, prior, ensemble_score](const RowVec& q) {
        return RowVec(g.grad(q) + tau * (ensemble_score.score(q) - prior.score(q)));
    };
    w.grad_batch = [g, tau, prior, ensemble_score](const RowMat& X) {
        RowMat sp = ensemble_score.eval_score(X);
        RowMat s0 = prior.eval_score(X);
        RowMat out(X.rows(), X.cols());
        for (int i = 0; i < X.rows(); ++i) {
            out.row(i) = g.grad(X.row(i)) + tau * (sp.row(i) - s0.row(i));
        }
        return out;
    };
    return w;
}

Witness kl_witness(const ScoreModel& target, const ScoreModel& ensemble_score) {
    require(static_cast<bool>(target.score), "kl_witness: missing target score");
    Witness w;
    w.grad = [target, ensemble_score](const RowVec& q) {
        return RowVec(ensemble_score.score(q) - target.score(q));
    };
    w.grad_batch = [target, ensemble_score](const RowMat& X) {
        RowMat sp = ensemble_score.eval_score(X);
        RowMat st = target.eval_score(X);
        return RowMat(sp - st);
    };
    return w;
}

Witness lifted_witness(const ScalarField& g) {
    Witness w;
    w.value = g.value;
    w.grad = g.grad;
    w.grad_batch = [g](const RowMat& X) {
        RowMat out(X.rows(), X.cols());
        for (int i = 0; i < X.rows(); ++i) out.row(i) = g.grad(X.row(i));
        return out;
    };
    w.hessian_bound = g.hessian_bound;
    return w;
}

ScoreModel gaussian_score_model(const RowVec& mean, const RowVec& sigma) {
    require(mean.size() == sigma.size(), "gaussian_score_model: dim mismatch");
    require((sigma.array() > 0.0).all(), "gaussian_score_model: sigma must be > 0");
    RowVec inv_var = sigma.array().square().inverse().matrix();
    double log_norm = -0.5 * mean.size() * std::log(2.0 * M_PI);
    for (int j = 0; j < sigma.size(); ++j) log_norm -= std::log(sigma[j]);
    ScoreModel m;
    m.log_density = [mean, inv_var, log_norm](const RowVec& q) {
        RowVec r = q - mean;
        return log_norm - 0.5 * (r.array().square() * inv_var.array()).sum();
    };
    m.score = [mean, inv_var](const RowVec& q) {
        return RowVec((-(q - mean).array() * inv_var.array()).matrix());
    };
    m.score_batch = [mean, inv_var](const RowMat& X) {
        RowMat out = -(X.rowwise() - mean);
        for (int j = 0; j < out.cols(); ++j) out.col(j) *= inv_var[j];
        return out;
    };
    return m;
}

ScoreModel flat_score_model(int dim) {
    ScoreModel m;
    m.score = [dim](const RowVec&) { return RowVec(RowVec::Zero(dim)); };
    m.score_batch = [](const RowMat& X) { return RowMat(RowMat::Zero(X.rows(), X.cols())); };
    return m;
}

ScoreModel wrapped_gaussian_score_model(const Space& space, const RowVec& mean,
                                        const RowVec& sigma, int images) {
    require(space.is_torus(), "wrapped_gaussian_score_model: requires torus space");
    require(mean.size() == space.dim && sigma.size() == space.dim,
            "wrapped_gaussian_score_model: dim mismatch");
    require((sigma.array() > 0.0).all(), "wrapped_gaussian_score_model: sigma must be > 0");
    Space sp = space;
    auto axis_terms = [sp, images](double t0, double s, double& dens, double& dscore) {
        dens = 0.0;
        dscore = 0.0;
        double inv_var = 1.0 / (s * s);
        for (int k = -images; k <= images; ++k) {
            double t = t0 + k * sp.period;
            double e = std::exp(-0.5 * t * t * inv_var);
            dens += e;
            dscore += -t * inv_var * e;
        }
    };
    ScoreModel m;
    m.log_density = [sp, mean, sigma, axis_terms](const RowVec& q) {
        double acc = 0.0;
        for (int j = 0; j < sp.dim; ++j) {
            double t0 = sp.disp_coord(mean[j], q[j]);
            double dens, dsc;
            axis_terms(t0, sigma[j], dens, dsc);
            acc += std::log(dens);
        }
        return acc;  // normalizing constant dropped
    };
    m.score = [sp, mean, sigma, axis_terms](const RowVec& q) {
        RowVec out(sp.dim);
        for (int j = 0; j < sp.dim; ++j) {
            double t0 = sp.disp_coord(mean[j], q[j]);
            double dens, dsc;
            axis_terms(t0, sigma[j], dens, dsc);
            out[j] = dsc / dens;
        }
        return out;
    };
    return m;
}

double silverman_bandwidth(const Ensemble& e) {
    const int n = e.n();
    const int d = e.dim();
    require(n >= 2, "silverman_bandwidth: need at least 2 particles");
    double mean_var = 0.0;
    if (e.space.is_torus()) {
        const double P = e.space.period;
        const double two_pi = 2.0 * M_PI;
        for (int j = 0; j < d; ++j) {
            double c = 0.0, s = 0.0;
            for (int i = 0; i < n; ++i) {
                double a = two_pi * e.positions(i, j) / P;
                c += std::cos(a);
                s += std::sin(a);
            }
            double r = std::sqrt(c * c + s * s) / n;
            double var;
            if (r < 1e-12) {
                var = P * P / 12.0;  // indistinguishable from uniform
            } else {
                double sd = P / two_pi * std::sqrt(std::max(-2.0 * std::log(r), 0.0));
                var = std::min(sd * sd, P * P / 12.0);
            }
            mean_var += var;
        }
    } else {
        for (int j = 0; j < d; ++j) {
            double mu = e.positions.col(j).mean();
            mean_var += (e.positions.col(j).array() - mu).square().sum() / n;
        }
    }
    mean_var /= d;
    double sigma = std::sqrt(std::max(mean_var, 1e-300));
    double h = 1.06 * sigma * std::pow(static_cast<double>(n), -1.0 / (d + 4));
    if (e.space.is_torus()) h = std::min(h, 0.5 * e.space.period);
    return h;
}

RowMat hessian_probes(const RowMat& positions, int cap) {
    const int n = static_cast<int>(positions.rows());
    const int d = static_cast<int>(positions.cols());
    if (n <= cap) return positions;
    int stride = (n + cap - 1) / cap;
    std::vector<int> idx;
    for (int i = 0; i < n; i += stride) idx.push_back(i);
    for (int j = 0; j < d; ++j) {
        int lo = 0, hi = 0;
        for (int i = 1; i < n; ++i) {
            if (positions(i, j) < positions(lo, j)) lo = i;
            if (positions(i, j) > positions(hi, j)) hi = i;
        }
        idx.push_back(lo);
        idx.push_back(hi);
    }
    RowMat out(static_cast<int>(idx.size()), d);
    for (size_t r = 0; r < idx.size(); ++r) out.row(static_cast<int>(r)) = positions.row(idx[r]);
    return out;
}

double empirical_hessian_bound(const Witness& w, const RowMat& probes, const Space& space,
                               double fd_step) {
    const int n = static_cast<int>(probes.rows());
    const int d = static_cast<int>(probes.cols());
    if (n == 0) return 0.0;
    std::vector<RowMat> cols(d);
    for (int j = 0; j < d; ++j) {
        RowMat plus = probes, minus = probes;
        plus.col(j).array() += fd_step;
        minus.col(j).array() -= fd_step;
        if (space.is_torus()) {
            plus = space.wrap(std::move(plus));
            minus = space.wrap(std::move(minus));
        }
        cols[j] = (w.eval_grad(plus) - w.eval_grad(minus)) / (2.0 * fd_step);
    }
    double best = 0.0;
    Eigen::MatrixXd jac(d, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) jac.col(j) = cols[j].row(i).transpose();
        if (d == 1) {
            best = std::max(best, std::fabs(jac(0, 0)));
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac.transpose() * jac);
            best = std::max(best, std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0)));
        }
    }
    return best;
}

}  // namespace wt
