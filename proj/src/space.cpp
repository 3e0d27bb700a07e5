#include "wt/space.hpp"

namespace wt {

Space Space::euclidean(int dim) {
    require(dim >= 1, "space.dim must be >= 1");
    return Space{dim, Topology::Euclidean, 1.0};
}

Space Space::torus(int dim, double period) {
    require(dim >= 1, "space.dim must be >= 1");
    require(period > 0.0 && std::isfinite(period), "space.period must be positive");
    return Space{dim, Topology::Torus, period};
}

RowVec Space::wrap(const RowVec& x) const {
    RowVec out = x;
    if (is_torus()) {
        for (int j = 0; j < out.size(); ++j) out[j] = wrap_coord(out[j]);
    }
    return out;
}

RowMat Space::wrap(RowMat pts) const {
    if (is_torus()) {
        double* p = pts.data();
        for (Eigen::Index i = 0; i < pts.size(); ++i) p[i] = wrap_coord(p[i]);
    }
    return pts;
}

RowVec Space::exp_map(const RowVec& x, const RowVec& v) const {
    require(x.size() == dim && v.size() == dim, "exp_map: dimension mismatch");
    require(v.allFinite(), "exp_map: non-finite tangent vector");
    RowVec out = x + v;
    if (is_torus()) {
        for (int j = 0; j < dim; ++j) out[j] = wrap_coord(out[j]);
    }
    return out;
}

RowVec Space::displacement(const RowVec& x, const RowVec& y) const {
    require(x.size() == dim && y.size() == dim, "displacement: dimension mismatch");
    RowVec out(dim);
    for (int j = 0; j < dim; ++j) out[j] = disp_coord(x[j], y[j]);
    return out;
}

double Space::squared_distance(const RowVec& x, const RowVec& y) const {
    return displacement(x, y).squaredNorm();
}

}  // namespace wt
