#include <doctest.h>

#include "wt/rng.hpp"
#include "wt/space.hpp"

#include <cmath>

using namespace wt;

namespace {

RowVec rv1(double a) {
    RowVec v(1);
    v << a;
    return v;
}

RowVec rv2(double a, double b) {
    RowVec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("exp_map on both topologies") {
    Space e2 = Space::euclidean(2);
    CHECK(e2.exp_map(rv2(0, 0), rv2(1, 2)) == rv2(1, 2));

    Space t1 = Space::torus(1);
    CHECK(t1.exp_map(rv1(0.9), rv1(0.3))[0] == doctest::Approx(0.2).epsilon(1e-12));

    RowVec x = rv2(0.3, 0.7);
    Space t2 = Space::torus(2);
    CHECK(t2.exp_map(x, rv2(0, 0)) == x);
    CHECK(e2.exp_map(rv2(1, -2), rv2(0, 0)) == rv2(1, -2));
}

TEST_CASE("exp_map argument errors") {
    Space e2 = Space::euclidean(2);
    CHECK_THROWS_AS(e2.exp_map(rv2(0, 0), rv1(1)), ArgumentError);
    RowVec bad = rv2(1, std::nan(""));
    CHECK_THROWS_AS(e2.exp_map(rv2(0, 0), bad), ArgumentError);
}

TEST_CASE("displacement: minimal image and identities") {
    Space e2 = Space::euclidean(2);
    CHECK(e2.displacement(rv2(1, 1), rv2(3, 0)) == rv2(2, -1));

    Space t1 = Space::torus(1);
    CHECK(t1.displacement(rv1(0.9), rv1(0.1))[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(t1.displacement(rv1(0.4), rv1(0.4))[0] == 0.0);
    CHECK(e2.displacement(rv2(1, 2), rv2(1, 2)) == rv2(0, 0));

    // Tie at exactly period/2 resolves to -period/2.
    CHECK(t1.disp_coord(0.0, 0.5) == -0.5);
    CHECK(t1.disp_coord(0.25, 0.75) == -0.5);
}

TEST_CASE("squared_distance") {
    Space t1 = Space::torus(1);
    CHECK(t1.squared_distance(rv1(0.9), rv1(0.1)) == doctest::Approx(0.04).epsilon(1e-12));
    Space e2 = Space::euclidean(2);
    CHECK(e2.squared_distance(rv2(0, 0), rv2(3, 4)) == 25.0);
    CHECK(e2.squared_distance(rv2(1, 1), rv2(1, 1)) == 0.0);
}

TEST_CASE("round trip: displacement recovers the tangent") {
    Rng rng(99, 0);
    for (const bool torus : {false, true}) {
        Space s = torus ? Space::torus(3) : Space::euclidean(3);
        for (int rep = 0; rep < 200; ++rep) {
            RowVec x(3), v(3);
            for (int j = 0; j < 3; ++j) {
                x[j] = torus ? rng.uniform() : 4.0 * (rng.uniform() - 0.5);
                v[j] = (rng.uniform() - 0.5) * 0.98;  // |v_j| < period/2 on torus
            }
            RowVec y = s.exp_map(x, v);
            RowVec d = s.displacement(x, y);
            for (int j = 0; j < 3; ++j) {
                CHECK(d[j] == doctest::Approx(v[j]).epsilon(0).scale(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("torus wrap idempotence") {
    Space t1 = Space::torus(1);
    Rng rng(3, 0);
    for (int rep = 0; rep < 500; ++rep) {
        double x = 20.0 * (rng.uniform() - 0.5);
        double once = t1.wrap_coord(x);
        CHECK(t1.wrap_coord(once) == once);
        CHECK(once >= 0.0);
        CHECK(once < 1.0);
    }
    CHECK(t1.wrap_coord(1.0) == 0.0);
    CHECK(t1.wrap_coord(-1e-17) == 0.0);
}

TEST_CASE("metric symmetry is exact") {
    Rng rng(17, 0);
    for (const bool torus : {false, true}) {
        Space s = torus ? Space::torus(2) : Space::euclidean(2);
        for (int rep = 0; rep < 300; ++rep) {
            RowVec x = rv2(rng.uniform(), rng.uniform());
            RowVec y = rv2(rng.uniform(), rng.uniform());
            CHECK(s.squared_distance(x, y) == s.squared_distance(y, x));
        }
    }
}
