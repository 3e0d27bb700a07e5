#include <doctest.h>

#include "wt/diagnostics.hpp"
#include "wt/parallel.hpp"
#include "wt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

using namespace wt;

namespace {

RowVec rv1(double a) {
    RowVec v(1);
    v << a;
    return v;
}

RowMat gaussian_samples(const Space& s, double mean, double sigma, int n, uint64_t seed) {
    RowVec m(s.dim), sg(s.dim);
    m.setConstant(mean);
    sg.setConstant(sigma);
    return sample_init(s, GaussianInit{m, sg}, n, seed).positions;
}

double brute_force_w2(const RowMat& x, const RowMat& y, const Space& s) {
    const int n = static_cast<int>(x.rows());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            RowVec a = x.row(i), b = y.row(perm[i]);
            total += s.squared_distance(a, b);
        }
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best / n);
}

}  // namespace

TEST_CASE("mmd stats: identical sets, singletons, independent draws") {
    Space e1 = Space::euclidean(1);
    Kernel k(e1, 1.0);

    RowMat x = gaussian_samples(e1, 0, 1, 40, 3);
    auto same = mmd_stats(x, x, k);
    CHECK(same.v_stat == 0.0);

    RowMat a(1, 1), b(1, 1);
    a << 0.0;
    b << 1.3;
    auto singles = mmd_stats(a, b, k);
    double kab = k.eval(a.row(0), b.row(0));
    CHECK(singles.v_stat == doctest::Approx(2.0 - 2.0 * kab).epsilon(1e-14));
    CHECK(singles.v_stat >= 0.0);
    CHECK_FALSE(singles.u_stat.has_value());

    RowMat p = gaussian_samples(e1, 0, 1, 1000, 4);
    RowMat q = gaussian_samples(e1, 0, 1, 1000, 5);
    auto indep = mmd_stats(p, q, k);
    REQUIRE(indep.u_stat.has_value());
    CHECK(std::fabs(*indep.u_stat) < 0.01);
    CHECK(indep.v_stat >= 0.0);
}

TEST_CASE("mmd statistics are independent of the parallel schedule") {
    Space e1 = Space::euclidean(1);
    Kernel k(e1, 0.9);
    RowMat x = gaussian_samples(e1, 0, 1, 301, 55);
    RowMat y = gaussian_samples(e1, 0.5, 1, 199, 56);
    bool prev = serial_mode();
    set_serial_mode(true);
    auto a = mmd_stats(x, y, k);
    set_serial_mode(false);
    auto b = mmd_stats(x, y, k);
    set_serial_mode(prev);
    CHECK(a.v_stat == b.v_stat);
    CHECK(*a.u_stat == *b.u_stat);
}

TEST_CASE("mmd stats: v >= 0 and u <= v on random instances") {
    Space e2 = Space::euclidean(2);
    Kernel k(e2, 0.7);
    Rng rng(6, 0);
    for (int rep = 0; rep < 30; ++rep) {
        int n = 2 + static_cast<int>(rng.uniform_below(20));
        int m = 2 + static_cast<int>(rng.uniform_below(20));
        RowMat x = gaussian_samples(e2, rng.normal(), 0.5 + rng.uniform(), n, 100 + rep);
        RowMat y = gaussian_samples(e2, rng.normal(), 0.5 + rng.uniform(), m, 200 + rep);
        auto st = mmd_stats(x, y, k);
        CHECK(st.v_stat >= 0.0);
        REQUIRE(st.u_stat.has_value());
        double slack = 2.0 * k.self_value() / std::min(n - 1, m - 1);
        CHECK(*st.u_stat <= st.v_stat + slack + 1e-12);
    }
}

TEST_CASE("exact w2: trivial and translation cases") {
    Space e2 = Space::euclidean(2);
    RowMat x = gaussian_samples(e2, 0, 1, 32, 7);
    CHECK(exact_w2(x, x, e2) == 0.0);

    RowMat shifted = x;
    shifted.col(0).array() += 3.0;
    shifted.col(1).array() += 4.0;
    CHECK(exact_w2(x, shifted, e2) == doctest::Approx(5.0).epsilon(1e-12));

    RowMat y = gaussian_samples(e2, 0, 1, 31, 8);
    CHECK_THROWS_AS(exact_w2(x, y, e2), ArgumentError);
    RowMat big = gaussian_samples(e2, 0, 1, 513, 9);
    CHECK_THROWS_AS(exact_w2(big, big, e2), ArgumentError);
}

TEST_CASE("exact w2 equals the 1-D sorted coupling") {
    Space e1 = Space::euclidean(1);
    Rng rng(10, 0);
    for (int rep = 0; rep < 20; ++rep) {
        int n = 3 + static_cast<int>(rng.uniform_below(40));
        RowMat x = gaussian_samples(e1, 0, 1, n, 300 + rep);
        RowMat y = gaussian_samples(e1, 1, 2, n, 400 + rep);
        std::vector<double> xs(n), ys(n);
        for (int i = 0; i < n; ++i) {
            xs[i] = x(i, 0);
            ys[i] = y(i, 0);
        }
        std::sort(xs.begin(), xs.end());
        std::sort(ys.begin(), ys.end());
        double cost = 0.0;
        for (int i = 0; i < n; ++i) cost += (xs[i] - ys[i]) * (xs[i] - ys[i]);
        double expect = std::sqrt(cost / n);
        CHECK(exact_w2(x, y, e1) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("exact w2 matches brute force on 200 random small instances") {
    Rng rng(11, 0);
    int instances = 0;
    while (instances < 200) {
        bool torus = rng.uniform() < 0.3;
        int d = 1 + static_cast<int>(rng.uniform_below(3));
        Space s = torus ? Space::torus(d) : Space::euclidean(d);
        int n = 2 + static_cast<int>(rng.uniform_below(6));  // up to 7
        RowMat x(n, d), y(n, d);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                x(i, j) = torus ? rng.uniform() : 2.0 * rng.normal();
                y(i, j) = torus ? rng.uniform() : 2.0 * rng.normal();
            }
        }
        double fast = exact_w2(x, y, s);
        double slow = brute_force_w2(x, y, s);
        CHECK(std::fabs(fast - slow) < 1e-12);
        ++instances;
    }
}

TEST_CASE("grid kl: self distance is zero and gaussian shift is m^2/2") {
    // exact tables: KL(N(0,1) || N(m,1)) = m^2 / 2
    const int n = 4001;
    const double lo = -10.0, hi = 10.0;
    GridDensity p, q;
    p.dim = q.dim = 1;
    p.x0[0] = q.x0[0] = lo;
    p.dx[0] = q.dx[0] = (hi - lo) / (n - 1);
    p.npts = q.npts = {n, 1};
    p.values.resize(n);
    q.values.resize(n);
    const double m = 1.3;
    for (int i = 0; i < n; ++i) {
        double x = lo + p.dx[0] * i;
        p.values[i] = std::exp(-0.5 * x * x);
        q.values[i] = std::exp(-0.5 * (x - m) * (x - m));
    }
    p.normalize();
    q.normalize();
    CHECK(grid_kl_tables(p, q) == doctest::Approx(0.5 * m * m).epsilon(1e-3));
    CHECK(grid_kl_tables(p, p) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(grid_kl_tables(p, q) >= -1e-10);
}

TEST_CASE("grid kl of an ensemble against its own KDE table is zero") {
    Space e1 = Space::euclidean(1);
    Ensemble e;
    e.space = e1;
    e.positions = gaussian_samples(e1, 0, 1, 300, 13);
    const double h = 0.4;

    GridDensity target;
    target.dim = 1;
    target.x0[0] = -9.0;
    target.dx[0] = 18.0 / 2047;
    target.npts = {2048, 1};
    target.values.assign(2048, 0.0);
    Kernel k(e1, h);
    for (int i = 0; i < 2048; ++i) {
        RowVec x = rv1(target.coord(0, i));
        double s = 0.0;
        for (int j = 0; j < e.n(); ++j) {
            RowVec z = e.positions.row(j);
            s += k.eval(x, z);
        }
        target.values[i] = s;
    }
    target.normalize();
    CHECK(grid_kl(e, target, h) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("grid kl self-distance calibration: sampled ensemble vs exact target") {
    Space e1 = Space::euclidean(1);
    Ensemble e;
    e.space = e1;
    e.positions = gaussian_samples(e1, 0, 1, 4000, 14);

    GridDensity target;
    target.dim = 1;
    target.x0[0] = -9.0;
    target.dx[0] = 18.0 / 4095;
    target.npts = {4096, 1};
    target.values.resize(4096);
    for (int i = 0; i < 4096; ++i) {
        double x = target.coord(0, i);
        target.values[i] = std::exp(-0.5 * x * x);
    }
    target.normalize();
    double kl = grid_kl(e, target, 0.15);
    CHECK(kl >= -1e-10);
    CHECK(kl < 0.05);  // KDE smoothing floor
}

TEST_CASE("grid kl coverage failure") {
    Space e1 = Space::euclidean(1);
    Ensemble e;
    e.space = e1;
    e.positions = gaussian_samples(e1, 0, 1, 50, 15);
    GridDensity tiny;
    tiny.dim = 1;
    tiny.x0[0] = -0.5;
    tiny.dx[0] = 1.0 / 63;
    tiny.npts = {64, 1};
    tiny.values.assign(64, 0.0);
    for (int i = 0; i < 64; ++i) {
        double x = tiny.coord(0, i);
        tiny.values[i] = std::exp(-0.5 * x * x);
    }
    tiny.normalize();
    CHECK_THROWS_AS(grid_kl(e, tiny, 0.3), ArgumentError);
}

TEST_CASE("rate fit: synthetic geometric series") {
    std::vector<double> series;
    for (int k = 0; k < 60; ++k) series.push_back(0.01 + 0.5 * std::pow(0.9, k));
    RateFit fit = rate_fit(series, 0, 59);
    REQUIRE(fit.ok);
    CHECK(fit.rho == doctest::Approx(0.9).epsilon(0.011));
    CHECK(std::fabs(fit.plateau - 0.01) < 0.002);

    std::vector<double> constant(40, 0.7);
    RateFit flat = rate_fit(constant, 0, 39);
    CHECK_FALSE(flat.ok);

    std::vector<double> pure;
    for (int k = 0; k < 40; ++k) pure.push_back(0.8 * std::pow(0.85, k));
    RateFit pf = rate_fit(pure, 0, 39);
    REQUIRE(pf.ok);
    CHECK(pf.plateau < 1e-6);
    CHECK(pf.rho == doctest::Approx(0.85).epsilon(0.002));
}

TEST_CASE("gradient bias estimate: zero for ensemble-independent witnesses") {
    Space e1 = Space::euclidean(1);
    Kernel k(e1, 1.0);
    Ensemble e;
    e.space = e1;
    e.positions = gaussian_samples(e1, 0.5, 1, 64, 16);

    FunctionalSpec lifted;
    lifted.kind = FunctionalKind::LinearLifted;
    lifted.backend = WitnessBackend::ClosedForm;
    lifted.g.value = [](const RowVec& x) { return 0.5 * x.squaredNorm(); };
    lifted.g.grad = [](const RowVec& x) { return x; };
    CHECK(gradient_bias_estimate(lifted, e, k, 1e-3, 1) == 0.0);

    FunctionalSpec kl;
    kl.kind = FunctionalKind::KL;
    kl.backend = WitnessBackend::KDEScore;
    kl.target_score = gaussian_score_model(rv1(0), rv1(1));
    kl.self_score_override = gaussian_score_model(rv1(0.5), rv1(1));
    CHECK(gradient_bias_estimate(kl, e, k, 1e-3, 2) == 0.0);
}

TEST_CASE("gradient bias estimate shrinks as the ensemble doubles") {
    Space e1 = Space::euclidean(1);
    Kernel k(e1, 1.0);
    RowMat target = gaussian_samples(e1, 0, 1, 256, 17);
    FunctionalSpec spec;
    spec.kind = FunctionalKind::MMD;
    spec.backend = WitnessBackend::ClosedForm;
    spec.target_samples = target;

    std::vector<double> ratios;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Ensemble small;
        small.space = e1;
        small.positions = gaussian_samples(e1, 0.8, 1, 200, 1000 + seed);
        Ensemble big;
        big.space = e1;
        big.positions = gaussian_samples(e1, 0.8, 1, 400, 2000 + seed);
        double eps_small = gradient_bias_estimate(spec, small, k, 1e-3, seed);
        double eps_big = gradient_bias_estimate(spec, big, k, 1e-3, seed);
        CHECK(eps_small > 0.0);
        ratios.push_back(eps_big / eps_small);
    }
    std::sort(ratios.begin(), ratios.end());
    CHECK(ratios[2] < 0.9);  // median of 5 seeds
}

TEST_CASE("metrics csv schema") {
    std::vector<IterationRecord> records(2);
    records[0].iter = 0;
    records[0].grad_norm2 = 1.5;
    records[0].alpha_used = 0.1;
    records[1].iter = 1;
    records[1].grad_norm2 = 0.75;
    records[1].alpha_used = 0.1;
    records[1].objective = 0.25;
    records[1].mmd2_target = 1e-3;
    std::ostringstream os;
    write_metrics_csv(os, records);
    std::istringstream is(os.str());
    std::string header, row0, row1;
    std::getline(is, header);
    std::getline(is, row0);
    std::getline(is, row1);
    CHECK(header ==
          "iter,objective,grad_norm2,alpha_used,witness_norm,hessian_bound,mmd2_target,"
          "w2_target,grid_kl,bias_est,wall_ms");
    CHECK(row0 == "0,,1.5,0.1,,,,,,,");
    CHECK(row1.substr(0, 7) == "1,0.25,");
}
