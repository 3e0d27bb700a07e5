#pragma once

#include "wt/common.hpp"

#include <cmath>
#include <string>

namespace wt {

enum class Topology { Euclidean, Torus };

/// Base domain: flat R^d or the flat torus [0, period)^d with periodic
/// identification. Torus coordinates are normalized to [0, period) by every
/// operation that returns a point.
struct Space {
    int dim = 1;
    Topology topology = Topology::Euclidean;
    double period = 1.0;

    static Space euclidean(int dim);
    static Space torus(int dim, double period = 1.0);

    bool is_torus() const { return topology == Topology::Torus; }

    /// Wrap a single coordinate into [0, period).
    double wrap_coord(double x) const;
    /// Minimal-image representative of (b - a), in [-period/2, period/2).
    /// Ties at exactly period/2 resolve to -period/2.
    double disp_coord(double a, double b) const;

    RowVec wrap(const RowVec& x) const;
    RowMat wrap(RowMat pts) const;

    RowVec exp_map(const RowVec& x, const RowVec& v) const;
    RowVec displacement(const RowVec& x, const RowVec& y) const;
    double squared_distance(const RowVec& x, const RowVec& y) const;

    std::string name() const { return is_torus() ? "torus" : "euclidean"; }
};

inline double Space::wrap_coord(double x) const {
    if (!is_torus()) return x;
    double w = x - period * std::floor(x / period);
    if (w >= period) w -= period;  // guard against rounding up to period
    if (w < 0.0) w = 0.0;
    return w;
}

inline double Space::disp_coord(double a, double b) const {
    double r = b - a;
    if (!is_torus()) return r;
    double d = r - period * std::floor(r / period + 0.5);
    if (d >= period * 0.5) d -= period;
    if (d < -period * 0.5) d += period;
    return d;
}

}  // namespace wt
