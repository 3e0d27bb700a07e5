#pragma once

#include "wt/common.hpp"
#include "wt/simd.hpp"
#include "wt/space.hpp"

namespace wt {

/// Gaussian RBF kernel on R^d, or its image-sum (wrapped) variant on the
/// torus: k(x,y) = sum over integer images n (|n_j| <= wrap_images) of
/// exp(-||disp(x,y) + n*period||^2 / (2 h^2)). Immutable after construction.
class Kernel {
public:
    Kernel(const Space& space, double bandwidth, int wrap_images = 3);

    const Space& space() const { return space_; }
    /// Effective bandwidth. On the torus the requested bandwidth is capped at
    /// period/2 so the image-sum truncation error stays below 1e-12.
    double bandwidth() const { return h_; }
    int wrap_images() const { return wrap_images_; }

    /// k(x,x): 1 on R^d, the image-sum constant on the torus.
    double self_value() const { return self_value_; }

    double eval(const RowVec& x, const RowVec& y) const;
    /// Gradient of k(x,y) in the first argument.
    RowVec grad1(const RowVec& x, const RowVec& y) const;

    /// n x m matrix of k(x_i, z_a). Parallelized over rows; per-entry pure.
    Eigen::MatrixXd gram(const RowMat& X, const RowMat& Z) const;

    /// Certified sup-norm bound on each first-derivative entry:
    /// |d k(x,y) / dx_j| <= bound for all x, y. Exact (e^{-1/2}/h) on R^d,
    /// numeric per-axis envelope on the torus.
    double first_derivative_bound() const { return first_deriv_bound_; }

    /// Certified sup-norm bound on every entry of the Hessian of k in the
    /// first argument: |d^2 k(x,y) / dx_i dx_j| <= bound for all x, y.
    /// Exact (1/h^2) on R^d, numeric per-axis envelope on the torus.
    double second_derivative_bound() const { return second_deriv_bound_; }

    simd::RbfSpec rbf_spec() const;

    /// Median pairwise distance of a point set (torus metric in torus mode);
    /// subsamples deterministically above 512 points.
    static double median_heuristic(const RowMat& pts, const Space& space);

private:
    Space space_;
    double h_;
    int wrap_images_;
    double self_value_;
    double first_deriv_bound_;
    double second_deriv_bound_;
};

}  // namespace wt
