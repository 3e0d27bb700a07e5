#include "wt/kernel.hpp"

#include "wt/parallel.hpp"
#include "wt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wt {

namespace {

struct AxisEnvelope {
    double sup_g;    // sup of the 1-D image sum g(u)
    double sup_g1;   // sup |g'(u)|
    double sup_g2;   // sup |g''(u)|
};

// Dense-grid sup of the wrapped 1-D Gaussian image sum and its first two
// derivatives over one period, padded with a Lipschitz margin from crude
// bounds on the next derivative so the result is a true upper bound.
AxisEnvelope torus_axis_envelope(double h, int wrap_images, double period) {
    const int grid_n = 4096;
    const double inv_h2 = 1.0 / (h * h);
    const double inv_two_h2 = 0.5 * inv_h2;
    const int n_images = 2 * wrap_images + 1;
    double sup_g = 0.0, sup_g1 = 0.0, sup_g2 = 0.0;
    for (int i = 0; i <= grid_n; ++i) {
        double u = -0.5 * period + period * static_cast<double>(i) / grid_n;
        double g = 0.0, g1 = 0.0, g2 = 0.0;
        for (int im = -wrap_images; im <= wrap_images; ++im) {
            double t = u + im * period;
            double e = std::exp(-t * t * inv_two_h2);
            g += e;
            g1 += -t * inv_h2 * e;
            g2 += (t * t * inv_h2 - 1.0) * inv_h2 * e;
        }
        sup_g = std::max(sup_g, g);
        sup_g1 = std::max(sup_g1, std::fabs(g1));
        sup_g2 = std::max(sup_g2, std::fabs(g2));
    }
    double step = period / grid_n;
    // sup|phi'| = e^{-1/2}/h < 0.61/h, sup|phi''| <= 1/h^2, sup|phi'''| < 1.4/h^3
    sup_g = std::min(sup_g + n_images * (0.61 / h) * step * 0.5, static_cast<double>(n_images));
    sup_g1 += n_images * (1.0 / (h * h)) * step * 0.5;
    sup_g2 += n_images * (1.4 / (h * h * h)) * step * 0.5;
    return {sup_g, sup_g1, sup_g2};
}

}  // namespace

Kernel::Kernel(const Space& space, double bandwidth, int wrap_images)
    : space_(space), h_(bandwidth), wrap_images_(wrap_images) {
    require(std::isfinite(bandwidth) && bandwidth > 0.0, "kernel.bandwidth must be positive");
    require(wrap_images >= 0, "kernel.wrap_images must be >= 0");
    if (space_.is_torus()) {
        h_ = std::min(h_, 0.5 * space_.period);
    }
    if (space_.is_torus()) {
        double inv_two_h2 = 0.5 / (h_ * h_);
        double s = 0.0;
        for (int im = -wrap_images_; im <= wrap_images_; ++im) {
            double t = im * space_.period;
            s += std::exp(-t * t * inv_two_h2);
        }
        self_value_ = std::pow(s, space_.dim);
        AxisEnvelope env = torus_axis_envelope(h_, wrap_images_, space_.period);
        first_deriv_bound_ = env.sup_g1 * std::pow(env.sup_g, space_.dim - 1);
        double diag = env.sup_g2 * std::pow(env.sup_g, space_.dim - 1);
        double off = space_.dim >= 2
                         ? env.sup_g1 * env.sup_g1 * std::pow(env.sup_g, space_.dim - 2)
                         : 0.0;
        second_deriv_bound_ = std::max(diag, off);
    } else {
        self_value_ = 1.0;
        // Sup of |dk/dx_j| is attained at axis offset h; sup of the per-entry
        // Hessian on the diagonal at x=y.
        first_deriv_bound_ = std::exp(-0.5) / h_;
        second_deriv_bound_ = 1.0 / (h_ * h_);
    }
}

simd::RbfSpec Kernel::rbf_spec() const {
    simd::RbfSpec spec;
    spec.dim = space_.dim;
    spec.inv_two_h2 = 0.5 / (h_ * h_);
    spec.inv_h2 = 1.0 / (h_ * h_);
    spec.torus = space_.is_torus();
    spec.period = space_.period;
    spec.wrap_images = wrap_images_;
    return spec;
}

double Kernel::eval(const RowVec& x, const RowVec& y) const {
    require(x.size() == space_.dim && y.size() == space_.dim, "kernel.eval: dimension mismatch");
    double k = 0.0;
    auto spec = rbf_spec();
    simd::scalar_ops.rbf_row(spec, x.data(), y.data(), 1, nullptr, &k, nullptr, nullptr);
    return k;
}

RowVec Kernel::grad1(const RowVec& x, const RowVec& y) const {
    require(x.size() == space_.dim && y.size() == space_.dim, "kernel.grad1: dimension mismatch");
    RowVec g = RowVec::Zero(space_.dim);
    auto spec = rbf_spec();
    simd::scalar_ops.rbf_row(spec, x.data(), y.data(), 1, nullptr, nullptr, nullptr, g.data());
    return g;
}

Eigen::MatrixXd Kernel::gram(const RowMat& X, const RowMat& Z) const {
    require(X.rows() >= 1 && Z.rows() >= 1, "kernel.gram: empty point list");
    require(X.cols() == space_.dim && Z.cols() == space_.dim, "kernel.gram: dimension mismatch");
    const int n = static_cast<int>(X.rows());
    const int m = static_cast<int>(Z.rows());
    Eigen::MatrixXd out(n, m);
    auto spec = rbf_spec();
    // Row-major staging buffer per row; Eigen::MatrixXd is column-major.
    parallel_for(n, [&](int i) {
        std::vector<double> row(static_cast<size_t>(m));
        simd::ops().rbf_row(spec, X.row(i).data(), Z.data(), m, nullptr, row.data(), nullptr,
                            nullptr);
        for (int a = 0; a < m; ++a) out(i, a) = row[a];
    });
    return out;
}

double Kernel::median_heuristic(const RowMat& pts, const Space& space) {
    const int n = static_cast<int>(pts.rows());
    require(n >= 1, "median_heuristic: empty point set");
    const int cap = 512;
    RowMat sub;
    const RowMat* use = &pts;
    if (n > cap) {
        Rng rng(0x6d656469616eULL, substream(StreamPurpose::Scratch));
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        for (int i = 0; i < cap; ++i) {
            int j = i + static_cast<int>(rng.uniform_below(n - i));
            std::swap(idx[i], idx[j]);
        }
        sub.resize(cap, pts.cols());
        for (int i = 0; i < cap; ++i) sub.row(i) = pts.row(idx[i]);
        use = &sub;
    }
    const int m = static_cast<int>(use->rows());
    if (m < 2) return 1.0;
    std::vector<double> d2;
    d2.reserve(static_cast<size_t>(m) * (m - 1) / 2);
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            RowVec a = use->row(i), b = use->row(j);
            d2.push_back(space.squared_distance(a, b));
        }
    }
    size_t mid = d2.size() / 2;
    std::nth_element(d2.begin(), d2.begin() + mid, d2.end());
    double med = std::sqrt(d2[mid]);
    return med > 0.0 ? med : 1.0;
}

}  // namespace wt
