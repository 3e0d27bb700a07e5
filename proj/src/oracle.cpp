#include "wt/oracle.hpp"

#include "wt/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

namespace wt {

namespace {

constexpr double kEdgeRatio = 1e-12;
constexpr int kMaxExpand = 60;

}  // namespace

GridDensity gibbs_grid_density_1d(const Fn1d& g, double tau, const Fn1d& prior_log,
                                  double lo_hint, double hi_hint, int points) {
    require(tau > 0.0, "gibbs_grid_density: tau must be positive");
    require(points >= 16, "gibbs_grid_density: too few grid points");
    require(hi_hint > lo_hint, "gibbs_grid_density: empty range hint");

    double lo = lo_hint, hi = hi_hint;
    std::vector<double> logv(points);
    for (int expand = 0;; ++expand) {
        double dx = (hi - lo) / (points - 1);
        double max_log = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < points; ++i) {
            double x = lo + dx * i;
            logv[i] = -g(x) / tau + prior_log(x);
            max_log = std::max(max_log, logv[i]);
        }
        require(std::isfinite(max_log), "gibbs_grid_density: log density not finite");
        double edge = std::max(logv.front(), logv.back());
        if (edge - max_log < std::log(kEdgeRatio)) {
            GridDensity out;
            out.dim = 1;
            out.x0[0] = lo;
            out.dx[0] = dx;
            out.npts = {points, 1};
            out.values.resize(points);
            for (int i = 0; i < points; ++i) out.values[i] = std::exp(logv[i] - max_log);
            // trapezoid normalization
            double mass = 0.0;
            for (int i = 0; i + 1 < points; ++i) {
                mass += 0.5 * (out.values[i] + out.values[i + 1]) * dx;
            }
            require(mass > 0.0, "gibbs_grid_density: zero mass");
            for (double& v : out.values) v /= mass;
            return out;
        }
        if (expand >= kMaxExpand) {
            throw ArgumentError("gibbs_grid_density: range expansion failed to cover support");
        }
        double width = hi - lo;
        lo -= 0.5 * width;
        hi += 0.5 * width;
    }
}

GridDensity gibbs_grid_density_2d(const std::function<double(double, double)>& g, double tau,
                                  const std::function<double(double, double)>& prior_log,
                                  double lo_hint, double hi_hint, int points) {
    require(tau > 0.0, "gibbs_grid_density: tau must be positive");
    require(points >= 16, "gibbs_grid_density: too few grid points");
    double lo = lo_hint, hi = hi_hint;
    std::vector<double> logv(static_cast<size_t>(points) * points);
    for (int expand = 0;; ++expand) {
        double dx = (hi - lo) / (points - 1);
        double max_log = -std::numeric_limits<double>::infinity();
        double max_edge = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < points; ++i) {
            double x = lo + dx * i;
            for (int j = 0; j < points; ++j) {
                double y = lo + dx * j;
                double v = -g(x, y) / tau + prior_log(x, y);
                logv[static_cast<size_t>(i) * points + j] = v;
                max_log = std::max(max_log, v);
                if (i == 0 || j == 0 || i == points - 1 || j == points - 1) {
                    max_edge = std::max(max_edge, v);
                }
            }
        }
        require(std::isfinite(max_log), "gibbs_grid_density: log density not finite");
        if (max_edge - max_log < std::log(kEdgeRatio)) {
            GridDensity out;
            out.dim = 2;
            out.x0 = {lo, lo};
            out.dx = {dx, dx};
            out.npts = {points, points};
            out.values.resize(logv.size());
            for (size_t i = 0; i < logv.size(); ++i) out.values[i] = std::exp(logv[i] - max_log);
            out.normalize();
            return out;
        }
        if (expand >= kMaxExpand) {
            throw ArgumentError("gibbs_grid_density: range expansion failed to cover support");
        }
        double width = hi - lo;
        lo -= 0.5 * width;
        hi += 0.5 * width;
    }
}

RowMat inverse_cdf_sample(const GridDensity& table, int n, uint64_t seed) {
    require(table.dim == 1, "inverse_cdf_sample: requires a 1-D table");
    require(n >= 1, "inverse_cdf_sample: n must be >= 1");
    const int m = table.npts[0];
    require(m >= 2, "inverse_cdf_sample: degenerate table");

    // Piecewise-constant cell convention: cell i is centered at coord(i).
    std::vector<double> cum(m + 1, 0.0);
    for (int i = 0; i < m; ++i) {
        cum[i + 1] = cum[i] + std::max(table.values[static_cast<size_t>(i)], 0.0);
    }
    double total = cum[m];
    require(total > 0.0, "inverse_cdf_sample: zero-mass table");

    Rng rng(seed, substream(StreamPurpose::Oracle));
    RowMat out(n, 1);
    for (int s = 0; s < n; ++s) {
        double u = rng.uniform() * total;
        int idx = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()) - 1;
        idx = std::clamp(idx, 0, m - 1);
        double mass = cum[idx + 1] - cum[idx];
        double frac = mass > 0.0 ? (u - cum[idx]) / mass : 0.5;
        out(s, 0) = table.coord(0, idx) + (frac - 0.5) * table.dx[0];
    }
    return out;
}

double pushforward_density_1d(const Fn1d& p, const Fn1d& u_grad, const Fn1d& u_hess, double t,
                              double x) {
    auto map = [&](double y) { return y + t * u_grad(y); };

    // Bracket the preimage: G(y) = map(y) - x is strictly increasing when
    // |t| sup|u''| < 1.
    double step = std::max(1.0, std::fabs(x));
    double a = x, b = x;
    double ga = map(a) - x, gb = ga;
    for (int i = 0; i < 120 && ga > 0.0; ++i) {
        a -= step;
        ga = map(a) - x;
        step *= 1.5;
    }
    step = std::max(1.0, std::fabs(x));
    for (int i = 0; i < 120 && gb < 0.0; ++i) {
        b += step;
        gb = map(b) - x;
        step *= 1.5;
    }
    if (ga > 0.0 || gb < 0.0) {
        throw ArgumentError("pushforward_density_1d: failed to bracket preimage");
    }

    // Newton with bisection fallback.
    double y = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        double gy = map(y) - x;
        if (gy > 0.0) b = y;
        else a = y;
        double deriv = 1.0 + t * u_hess(y);
        if (deriv <= 0.0) {
            throw ArgumentError("pushforward_density_1d: invertibility precondition violated");
        }
        double y_next = y - gy / deriv;
        if (!(y_next > a && y_next < b)) y_next = 0.5 * (a + b);
        if (std::fabs(y_next - y) < 1e-15 * std::max(1.0, std::fabs(y))) {
            y = y_next;
            break;
        }
        y = y_next;
    }

    double jac = 1.0 + t * u_hess(y);
    if (jac <= 0.0) {
        throw ArgumentError("pushforward_density_1d: invertibility precondition violated");
    }
    return p(y) / std::fabs(jac);
}

namespace {

void put_number(std::ostream& os, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}

}  // namespace

void write_density_csv(std::ostream& os, const GridDensity& table) {
    if (table.dim == 1) {
        os << "x,density\n";
        for (int i = 0; i < table.npts[0]; ++i) {
            put_number(os, table.coord(0, i));
            os << ",";
            put_number(os, table.values[static_cast<size_t>(i)]);
            os << "\n";
        }
        return;
    }
    os << "x,y,density\n";
    for (int i = 0; i < table.npts[0]; ++i) {
        for (int j = 0; j < table.npts[1]; ++j) {
            put_number(os, table.coord(0, i));
            os << ",";
            put_number(os, table.coord(1, j));
            os << ",";
            put_number(os, table.at(i, j));
            os << "\n";
        }
    }
}

}  // namespace wt
