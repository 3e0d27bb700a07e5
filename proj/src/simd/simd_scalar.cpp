#include "wt/simd.hpp"

#include <cmath>
#include <vector>

// Scalar reference kernels. These define the semantics; the vector backends
// must agree with them to within floating-point reassociation tolerance.

namespace wt::simd {

namespace {

inline double minimal_image(double r, double period) {
    double d = r - period * std::floor(r / period + 0.5);
    if (d >= period * 0.5) d -= period;
    if (d < -period * 0.5) d += period;
    return d;
}

void sqdist_row_scalar(const RbfSpec& spec, const double* x, const double* Z, int m,
                       double* out) {
    const int d = spec.dim;
    for (int a = 0; a < m; ++a) {
        const double* z = Z + static_cast<size_t>(a) * d;
        double s2 = 0.0;
        if (spec.torus) {
            for (int j = 0; j < d; ++j) {
                double u = minimal_image(z[j] - x[j], spec.period);
                s2 += u * u;
            }
        } else {
            for (int j = 0; j < d; ++j) {
                double u = z[j] - x[j];
                s2 += u * u;
            }
        }
        out[a] = s2;
    }
}

void exp_array_scalar(const double* x, int n, double* y) {
    for (int i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

constexpr int kMaxDim = 8;

void rbf_row_euclid(const RbfSpec& spec, const double* x, const double* Z, int m,
                    const double* weights, double* row, double* sum, double* grad) {
    const int d = spec.dim;
    double u_small[kMaxDim];
    double* u = u_small;
    std::vector<double> u_big;
    if (d > kMaxDim) {
        u_big.resize(d);
        u = u_big.data();
    }
    double acc = 0.0;
    for (int a = 0; a < m; ++a) {
        const double* z = Z + static_cast<size_t>(a) * d;
        double s2 = 0.0;
        for (int j = 0; j < d; ++j) {
            double diff = z[j] - x[j];
            u[j] = diff;
            s2 += diff * diff;
        }
        double k = std::exp(-s2 * spec.inv_two_h2);
        if (row) row[a] = k;
        double wk = weights ? weights[a] * k : k;
        acc += wk;
        if (grad) {
            double c = wk * spec.inv_h2;
            for (int j = 0; j < d; ++j) grad[j] += c * u[j];
        }
    }
    if (sum) *sum += acc;
}

void rbf_row_torus(const RbfSpec& spec, const double* x, const double* Z, int m,
                   const double* weights, double* row, double* sum, double* grad) {
    const int d = spec.dim;
    const int W = spec.wrap_images;
    const double P = spec.period;
    double S_small[kMaxDim], T_small[kMaxDim];
    std::vector<double> S_big, T_big;
    double* S = S_small;
    double* T = T_small;
    if (d > kMaxDim) {
        S_big.resize(d);
        T_big.resize(d);
        S = S_big.data();
        T = T_big.data();
    }
    double acc = 0.0;
    for (int a = 0; a < m; ++a) {
        const double* z = Z + static_cast<size_t>(a) * d;
        for (int j = 0; j < d; ++j) {
            double u = minimal_image(z[j] - x[j], P);
            double sj = 0.0, tj = 0.0;
            for (int i = -W; i <= W; ++i) {
                double t = u + i * P;
                double e = std::exp(-t * t * spec.inv_two_h2);
                sj += e;
                tj += t * e;
            }
            S[j] = sj;
            T[j] = tj;
        }
        double k = 1.0;
        for (int j = 0; j < d; ++j) k *= S[j];
        if (row) row[a] = k;
        double w = weights ? weights[a] : 1.0;
        acc += w * k;
        if (grad) {
            // d k / d x_j = T_j / h^2 * prod_{l != j} S_l; products computed
            // by exclusion to stay finite when an axis sum underflows.
            for (int j = 0; j < d; ++j) {
                double p = 1.0;
                for (int l = 0; l < d; ++l) {
                    if (l != j) p *= S[l];
                }
                grad[j] += w * spec.inv_h2 * T[j] * p;
            }
        }
    }
    if (sum) *sum += acc;
}

void rbf_row_scalar(const RbfSpec& spec, const double* x, const double* Z, int m,
                    const double* weights, double* row, double* sum, double* grad) {
    if (spec.torus) {
        rbf_row_torus(spec, x, Z, m, weights, row, sum, grad);
    } else {
        rbf_row_euclid(spec, x, Z, m, weights, row, sum, grad);
    }
}

}  // namespace

const Ops scalar_ops = {
    sqdist_row_scalar,
    exp_array_scalar,
    rbf_row_scalar,
};

}  // namespace wt::simd
