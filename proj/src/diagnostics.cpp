#include "wt/diagnostics.hpp"

#include "wt/parallel.hpp"
#include "wt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

namespace wt {

namespace {

// Mean over all pairs, accumulated per row and combined in row order.
double mean_block(const simd::RbfSpec& spec, const RowMat& X, const RowMat& Z,
                  double* diag_free_sum = nullptr, double self_value = 1.0) {
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
    if (diag_free_sum) *diag_free_sum = total - n * self_value;
    return total / (static_cast<double>(n) * static_cast<double>(m));
}

}  // namespace

MmdStats mmd_stats(const RowMat& X, const RowMat& Y, const Kernel& k) {
    require(X.rows() >= 1 && Y.rows() >= 1, "mmd_stats: empty sample set");
    require(X.cols() == Y.cols(), "mmd_stats: dimension mismatch");
    auto spec = k.rbf_spec();
    const int n = static_cast<int>(X.rows());
    const int m = static_cast<int>(Y.rows());
    double xx_offdiag = 0.0, yy_offdiag = 0.0;
    double mean_xx = mean_block(spec, X, X, &xx_offdiag, k.self_value());
    double mean_yy = mean_block(spec, Y, Y, &yy_offdiag, k.self_value());
    double mean_xy = mean_block(spec, X, Y);

    MmdStats out;
    out.v_stat = std::max(mean_xx + mean_yy - 2.0 * mean_xy, 0.0);
    if (n >= 2 && m >= 2) {
        out.u_stat = xx_offdiag / (static_cast<double>(n) * (n - 1)) +
                     yy_offdiag / (static_cast<double>(m) * (m - 1)) - 2.0 * mean_xy;
    }
    return out;
}

double exact_w2(const RowMat& X, const RowMat& Y, const Space& space) {
    const int n = static_cast<int>(X.rows());
    require(n >= 1, "exact_w2: empty sample set");
    require(Y.rows() == n, "exact_w2: sample sets must have equal sizes");
    require(n <= 512, "exact_w2: size cap is 512");
    require(X.cols() == space.dim && Y.cols() == space.dim, "exact_w2: dimension mismatch");

    std::vector<double> cost(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double s2 = 0.0;
            for (int a = 0; a < space.dim; ++a) {
                double u = space.disp_coord(X(i, a), Y(j, a));
                s2 += u * u;
            }
            cost[static_cast<size_t>(i) * n + j] = s2;
        }
    }

    // Shortest augmenting path assignment with potentials (exact optimum).
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[static_cast<size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    double total = 0.0;
    for (int j = 1; j <= n; ++j) {
        if (p[j]) total += cost[static_cast<size_t>(p[j] - 1) * n + (j - 1)];
    }
    return std::sqrt(total / n);
}

void GridDensity::normalize() {
    double mass = 0.0;
    for (double v : values) mass += v;
    mass *= cell();
    require(mass > 0.0 && std::isfinite(mass), "GridDensity: cannot normalize zero/invalid mass");
    for (double& v : values) v /= mass;
}

double grid_kl(const Ensemble& e, const GridDensity& target, double kde_bandwidth) {
    require(target.dim == e.dim(), "grid_kl: grid/ensemble dimension mismatch");
    require(target.dim <= 2, "grid_kl: only 1-D and 2-D grids supported");
    require(kde_bandwidth > 0.0, "grid_kl: bandwidth must be positive");

    // Coverage: boundary mass of the target must be negligible.
    double edge_mass = 0.0;
    if (target.dim == 1) {
        edge_mass = (target.at(0) + target.at(target.npts[0] - 1)) * target.cell();
    } else {
        for (int i = 0; i < target.npts[0]; ++i) {
            edge_mass += target.at(i, 0) + target.at(i, target.npts[1] - 1);
        }
        for (int j = 0; j < target.npts[1]; ++j) {
            edge_mass += target.at(0, j) + target.at(target.npts[0] - 1, j);
        }
        edge_mass *= target.cell();
    }
    if (edge_mass > 1e-6) throw ArgumentError("grid_kl: grid does not cover target support");

    // KDE of the ensemble at the grid nodes.
    Kernel kde(e.space, kde_bandwidth);
    auto spec = kde.rbf_spec();
    const int n0 = target.npts[0];
    const int n1 = target.dim == 2 ? target.npts[1] : 1;
    std::vector<double> phat(static_cast<size_t>(n0) * n1, 0.0);
    const RowMat& pts = e.positions;
    parallel_for(n0, [&](int i) {
        RowVec q(target.dim);
        for (int j = 0; j < n1; ++j) {
            q[0] = target.coord(0, i);
            if (target.dim == 2) q[1] = target.coord(1, j);
            double s = 0.0;
            simd::ops().rbf_row(spec, q.data(), pts.data(), static_cast<int>(pts.rows()),
                                nullptr, nullptr, &s, nullptr);
            phat[static_cast<size_t>(i) * n1 + j] = s;
        }
    });

    GridDensity phat_grid = target;
    phat_grid.values = std::move(phat);
    return grid_kl_tables(phat_grid, target);
}

double grid_kl_tables(const GridDensity& p, const GridDensity& q) {
    require(p.dim == q.dim && p.npts == q.npts, "grid_kl_tables: grid mismatch");
    double cell = q.cell();
    double p_mass = 0.0, q_mass = 0.0;
    for (size_t i = 0; i < p.values.size(); ++i) {
        p_mass += p.values[i];
        q_mass += q.values[i];
    }
    p_mass *= cell;
    q_mass *= cell;
    require(p_mass > 0.0 && q_mass > 0.0, "grid_kl_tables: zero mass");

    double kl = 0.0;
    for (size_t i = 0; i < p.values.size(); ++i) {
        double pi = p.values[i] / p_mass;
        if (pi <= 0.0) continue;
        double qi = std::max(q.values[i] / q_mass, 1e-300);
        kl += pi * std::log(pi / qi);
    }
    return kl * cell;
}

RateFit rate_fit(const std::vector<double>& series, int lo, int hi) {
    RateFit out;
    hi = std::min(hi, static_cast<int>(series.size()) - 1);
    if (lo < 0 || hi - lo + 1 < 8) {
        out.note = "window too short";
        return out;
    }
    std::vector<double> e;
    for (int k = lo; k <= hi; ++k) {
        if (!std::isfinite(series[k])) {
            out.note = "non-finite series";
            return out;
        }
        e.push_back(series[k]);
    }
    const int n = static_cast<int>(e.size());
    double min_e = *std::min_element(e.begin(), e.end());
    double max_e = *std::max_element(e.begin(), e.end());
    if (!(min_e > 0.0) || max_e <= min_e) {
        out.note = "series not positive-decaying";
        return out;
    }

    auto eval_c = [&](double c, double& rho, double& amp) -> double {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (int k = 0; k < n; ++k) {
            double r = e[k] - c;
            if (r <= 0.0) return std::numeric_limits<double>::infinity();
            double y = std::log(r);
            sx += k;
            sy += y;
            sxx += static_cast<double>(k) * k;
            sxy += k * y;
        }
        double denom = n * sxx - sx * sx;
        double slope = (n * sxy - sx * sy) / denom;
        double inter = (sy - slope * sx) / n;
        rho = std::exp(slope);
        amp = std::exp(inter);
        if (!(rho > 1e-6 && rho < 0.99999)) return std::numeric_limits<double>::infinity();
        double ss = 0.0;
        for (int k = 0; k < n; ++k) {
            double m = c + amp * std::pow(rho, k);
            ss += (e[k] - m) * (e[k] - m);
        }
        return std::sqrt(ss / n);
    };

    double best_c = -1.0, best_res = std::numeric_limits<double>::infinity();
    double best_rho = 0.0, best_amp = 0.0;
    const int coarse = 256;
    for (int j = 0; j < coarse; ++j) {
        double c = min_e * j / coarse;
        double rho = 0.0, amp = 0.0;
        double res = eval_c(c, rho, amp);
        if (res < best_res) {
            best_res = res;
            best_c = c;
            best_rho = rho;
            best_amp = amp;
        }
    }
    if (best_c >= 0.0) {
        double step = min_e / coarse;
        for (int j = -32; j <= 32; ++j) {
            double c = best_c + step * j / 32.0;
            if (c < 0.0) continue;
            double rho = 0.0, amp = 0.0;
            double res = eval_c(c, rho, amp);
            if (res < best_res) {
                best_res = res;
                best_c = c;
                best_rho = rho;
                best_amp = amp;
            }
        }
    }

    if (!std::isfinite(best_res) || best_c < 0.0) {
        out.note = "no geometric fit (zero decay)";
        return out;
    }
    out.ok = true;
    out.rho = best_rho;
    out.plateau = best_c;
    out.residual = best_res;
    (void)best_amp;
    return out;
}

double gradient_bias_estimate(const FunctionalSpec& spec, const Ensemble& e, const Kernel& k,
                              double lambda, uint64_t seed) {
    require(e.n() >= 4, "gradient_bias_estimate: need at least 4 particles");
    const int n = e.n();
    const int half = n / 2;
    Ensemble a, b;
    a.space = b.space = e.space;
    a.positions = e.positions.topRows(half);
    b.positions = e.positions.bottomRows(n - half);

    Witness wa = solve_witness(spec, a, k, lambda, seed ^ substream(StreamPurpose::BiasSplit, 0));
    Witness wb = solve_witness(spec, b, k, lambda, seed ^ substream(StreamPurpose::BiasSplit, 1));
    RowMat ga = wa.eval_grad(e.positions);
    RowMat gb = wb.eval_grad(e.positions);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += (ga.row(i) - gb.row(i)).squaredNorm();
    return acc / (2.0 * n);
}

namespace {

// Shortest round-trip decimal form; byte-stable across runs.
void put_cell(std::ostream& os, const std::optional<double>& v) {
    os << ",";
    if (v) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), *v);
        os.write(buf, res.ptr - buf);
    }
}

}  // namespace

void write_metrics_csv(std::ostream& os, const std::vector<IterationRecord>& records) {
    os << "iter,objective,grad_norm2,alpha_used,witness_norm,hessian_bound,"
          "mmd2_target,w2_target,grid_kl,bias_est,wall_ms\n";
    for (const auto& r : records) {
        os << r.iter;
        put_cell(os, r.objective);
        put_cell(os, r.grad_norm2);
        put_cell(os, r.alpha_used);
        put_cell(os, r.witness_norm);
        put_cell(os, r.hessian_bound);
        put_cell(os, r.mmd2_target);
        put_cell(os, r.w2_target);
        put_cell(os, r.grid_kl);
        put_cell(os, r.bias_est);
        put_cell(os, r.wall_ms);
        os << "\n";
    }
}

}  // namespace wt
