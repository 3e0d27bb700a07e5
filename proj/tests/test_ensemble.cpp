#include <doctest.h>

#include "wt/ensemble.hpp"

#include <cmath>
#include <string>

using namespace wt;

namespace {

RowVec rv(std::initializer_list<double> xs) {
    RowVec v(static_cast<Eigen::Index>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("degenerate gaussian init is the mean") {
    Space e2 = Space::euclidean(2);
    Ensemble e = sample_init(e2, GaussianInit{rv({2, 2}), rv({0, 0})}, 1, 7);
    CHECK(e.n() == 1);
    CHECK(e.positions(0, 0) == 2.0);
    CHECK(e.positions(0, 1) == 2.0);
}

TEST_CASE("uniform torus mean") {
    Space t1 = Space::torus(1);
    Ensemble e = sample_init(t1, UniformTorusInit{}, 100000, 11);
    double mean = e.positions.col(0).mean();
    CHECK(std::fabs(mean - 0.5) < 0.01);
    CHECK(e.positions.minCoeff() >= 0.0);
    CHECK(e.positions.maxCoeff() < 1.0);
}

TEST_CASE("same seed gives bit-identical ensembles") {
    Space e3 = Space::euclidean(3);
    GaussianInit init{rv({0, 1, -1}), rv({1, 2, 0.5})};
    Ensemble a = sample_init(e3, init, 500, 12345);
    Ensemble b = sample_init(e3, init, 500, 12345);
    CHECK(a.positions == b.positions);
    Ensemble c = sample_init(e3, init, 500, 12345, 1);
    CHECK(a.positions != c.positions);
}

TEST_CASE("wrapped gaussian init wraps and validates") {
    Space t2 = Space::torus(2);
    Ensemble e = sample_init(t2, WrappedGaussianInit{rv({0.5, 0.1}), rv({0.4, 0.4})}, 2000, 3);
    CHECK(e.positions.minCoeff() >= 0.0);
    CHECK(e.positions.maxCoeff() < 1.0);
    CHECK_THROWS_AS(sample_init(t2, WrappedGaussianInit{rv({0, 0}), rv({0, 1})}, 10, 3),
                    ArgumentError);
    Space e2 = Space::euclidean(2);
    CHECK_THROWS_AS(sample_init(e2, UniformTorusInit{}, 10, 3), ArgumentError);
}

TEST_CASE("push: identity, linear map, torus wrap") {
    Space e1 = Space::euclidean(1);
    Ensemble e = sample_init(e1, GaussianInit{rv({2}), rv({0})}, 4, 1);

    auto zero_field = [](const RowMat& x) { return RowMat(RowMat::Zero(x.rows(), x.cols())); };
    Ensemble same = push(e, zero_field, 0.5);
    CHECK(same.positions == e.positions);

    auto id_field = [](const RowMat& x) { return x; };
    Ensemble moved = push(e, id_field, 0.1);
    CHECK(moved.positions(0, 0) == doctest::Approx(1.8).epsilon(1e-15));
    CHECK(e.positions(0, 0) == 2.0);  // input untouched

    Space t1 = Space::torus(1);
    Ensemble et = sample_init(t1, UniformTorusInit{}, 1, 2);
    et.positions(0, 0) = 0.05;
    auto const_field = [](const RowMat& x) {
        return RowMat(RowMat::Constant(x.rows(), x.cols(), 0.2));
    };
    Ensemble wrapped = push(et, const_field, 0.5);
    CHECK(wrapped.positions(0, 0) == doctest::Approx(0.95).epsilon(1e-12));
}

TEST_CASE("push rejects non-finite gradients with the particle index") {
    Space e1 = Space::euclidean(1);
    Ensemble e = sample_init(e1, GaussianInit{rv({0}), rv({1})}, 3, 5);
    auto bad_field = [](const RowMat& x) {
        RowMat g = RowMat::Zero(x.rows(), x.cols());
        g(1, 0) = std::nan("");
        return g;
    };
    try {
        push(e, bad_field, 0.1);
        FAIL("expected NumericalError");
    } catch (const NumericalError& err) {
        CHECK(std::string(err.what()).find("particle 1") != std::string::npos);
    }
}

TEST_CASE("push composition equals composed map particlewise") {
    Space e1 = Space::euclidean(1);
    Ensemble e = sample_init(e1, GaussianInit{rv({0}), rv({2})}, 64, 9);
    auto f1 = [](const RowMat& x) { return RowMat(x.array().sin().matrix()); };
    auto f2 = [](const RowMat& x) { return RowMat(x.array().cos().matrix()); };
    Ensemble twice = push(push(e, f1, 0.3), f2, 0.7);
    RowMat expect = e.positions;
    expect = expect - 0.3 * RowMat(expect.array().sin().matrix());
    expect = expect - 0.7 * RowMat(expect.array().cos().matrix());
    CHECK(twice.positions == expect);
}

TEST_CASE("empirical_mean") {
    Space e1 = Space::euclidean(1);
    Ensemble e = sample_init(e1, GaussianInit{rv({0}), rv({1})}, 10, 4);
    CHECK(empirical_mean(e, [](const RowVec&) { return 3.25; }) == 3.25);

    Ensemble pair = sample_init(e1, GaussianInit{rv({0}), rv({0})}, 2, 4);
    pair.positions(0, 0) = 1.0;
    pair.positions(1, 0) = 3.0;
    CHECK(empirical_mean(pair, [](const RowVec& x) { return x[0]; }) == 2.0);

    // indicator bin mean vs direct count
    Ensemble big = sample_init(e1, GaussianInit{rv({0}), rv({1})}, 512, 8);
    auto in_bin = [](const RowVec& x) { return (x[0] >= 0.0 && x[0] < 0.5) ? 1.0 : 0.0; };
    int count = 0;
    for (int i = 0; i < big.n(); ++i) {
        if (big.positions(i, 0) >= 0.0 && big.positions(i, 0) < 0.5) ++count;
    }
    CHECK(empirical_mean(big, in_bin) == static_cast<double>(count) / big.n());

    CHECK_THROWS_AS(
        empirical_mean(pair, [](const RowVec&) { return std::nan(""); }), NumericalError);
}
