#include <doctest.h>

#include "wt/functionals.hpp"
#include "wt/rng.hpp"
#include "wt/transport.hpp"

#include <cmath>

using namespace wt;

namespace {

RowVec rv(std::initializer_list<double> xs) {
    RowVec v(static_cast<Eigen::Index>(xs.size()));
    int i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

ScalarField double_well() {
    ScalarField g;
    g.value = [](const RowVec& x) {
        double t = x[0] * x[0] - 1.0;
        return t * t;
    };
    g.grad = [](const RowVec& x) { return rv({4.0 * x[0] * (x[0] * x[0] - 1.0)}); };
    return g;
}

FunctionalSpec entropy_spec(WitnessBackend backend, uint64_t /*seed*/) {
    Space e1 = Space::euclidean(1);
    FunctionalSpec spec;
    spec.kind = FunctionalKind::LinearEntropyKL;
    spec.backend = backend;
    spec.g = double_well();
    spec.tau = 0.5;
    spec.prior_score = gaussian_score_model(rv({0}), rv({2}));
    spec.prior_sampler = [e1](int n, uint64_t s) {
        return sample_init(e1, GaussianInit{rv({0}), rv({2})}, n, s,
                           substream(StreamPurpose::PriorSamples))
            .positions;
    };
    return spec;
}

}  // namespace

TEST_CASE("backend legality table") {
    CHECK(backend_legal(FunctionalKind::MMD, WitnessBackend::ClosedForm));
    CHECK_FALSE(backend_legal(FunctionalKind::MMD, WitnessBackend::RKHSDual));
    CHECK(backend_legal(FunctionalKind::LinearLifted, WitnessBackend::ClosedForm));
    CHECK(backend_legal(FunctionalKind::KL, WitnessBackend::KDEScore));
    CHECK_FALSE(backend_legal(FunctionalKind::KL, WitnessBackend::RKHSDual));
    CHECK(backend_legal(FunctionalKind::LinearEntropyKL, WitnessBackend::KDEScore));
    CHECK(backend_legal(FunctionalKind::LinearEntropyKL, WitnessBackend::RKHSDual));
    CHECK_FALSE(backend_legal(FunctionalKind::LinearEntropyKL, WitnessBackend::ClosedForm));
    CHECK(backend_legal(FunctionalKind::Chi2, WitnessBackend::RKHSDual));
    CHECK_FALSE(backend_legal(FunctionalKind::Chi2, WitnessBackend::KDEScore));

    FunctionalSpec bad;
    bad.kind = FunctionalKind::MMD;
    bad.backend = WitnessBackend::RKHSDual;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("solve_witness: mmd with matching target is the zero witness") {
    Space e2 = Space::euclidean(2);
    Ensemble e = sample_init(e2, GaussianInit{rv({0, 0}), rv({1, 1})}, 60, 3);
    FunctionalSpec spec;
    spec.kind = FunctionalKind::MMD;
    spec.backend = WitnessBackend::ClosedForm;
    spec.target_samples = e.positions;
    Kernel k(e2, 1.0);
    Witness w = solve_witness(spec, e, k, 1e-3, 0);
    CHECK(*w.rkhs_norm == 0.0);
    CHECK(*objective_estimate(spec, e, w) == 0.0);
    CHECK(grad_norm_estimate(w, e) == 0.0);
}

TEST_CASE("solve_witness: lifted witness is ensemble independent") {
    Space e1 = Space::euclidean(1);
    FunctionalSpec spec;
    spec.kind = FunctionalKind::LinearLifted;
    spec.backend = WitnessBackend::ClosedForm;
    spec.g = double_well();
    Kernel k(e1, 1.0);
    Ensemble a = sample_init(e1, GaussianInit{rv({0}), rv({1})}, 30, 4);
    Ensemble b = sample_init(e1, GaussianInit{rv({5}), rv({2})}, 50, 5);
    Witness wa = solve_witness(spec, a, k, 1e-3, 0);
    Witness wb = solve_witness(spec, b, k, 1e-3, 0);
    for (double x : {-2.0, 0.0, 1.4}) {
        CHECK(wa.grad(rv({x})) == wb.grad(rv({x})));
        CHECK(wa.value(rv({x})) == wb.value(rv({x})));
    }
}

TEST_CASE("grad_norm_estimate: trivial and scaling cases") {
    Space e2 = Space::euclidean(2);
    Ensemble e = sample_init(e2, GaussianInit{rv({0, 0}), rv({1, 1})}, 40, 6);

    Witness zero;
    zero.grad = [](const RowVec& x) { return RowVec(RowVec::Zero(x.size())); };
    CHECK(grad_norm_estimate(zero, e) == 0.0);

    RowVec c = rv({0.3, -0.4});
    Witness constant;
    constant.grad = [c](const RowVec&) { return c; };
    CHECK(grad_norm_estimate(constant, e) == doctest::Approx(0.25).epsilon(1e-14));

    Witness sine;
    sine.grad = [](const RowVec& x) {
        return RowVec(rv({std::sin(x[0]), std::cos(x[1])}));
    };
    double base = grad_norm_estimate(sine, e);
    Witness doubled;
    doubled.grad = [&sine](const RowVec& x) { return RowVec(2.0 * sine.grad(x)); };
    CHECK(grad_norm_estimate(doubled, e) == 4.0 * base);  // power-of-two scale is exact
}

TEST_CASE("grad_norm_estimate matches grid quadrature") {
    // p = N(0,1) via stratified inverse-CDF particles; f'(x) = cos(x).
    const int grid_n = 8001;
    const double lo = -10.0, hi = 10.0;
    const double dx = (hi - lo) / (grid_n - 1);
    std::vector<double> dens(grid_n), cdf(grid_n, 0.0);
    for (int i = 0; i < grid_n; ++i) {
        double x = lo + dx * i;
        dens[i] = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    }
    double integral = 0.0;
    for (int i = 1; i < grid_n; ++i) {
        cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * dx;
    }
    for (int i = 0; i < grid_n; ++i) cdf[i] /= cdf[grid_n - 1];
    const int n = 4096;
    Space e1 = Space::euclidean(1);
    Ensemble e;
    e.space = e1;
    e.positions.resize(n, 1);
    int seg = 1;
    for (int i = 0; i < n; ++i) {
        double u = (i + 0.5) / n;
        while (seg < grid_n - 1 && cdf[seg] < u) ++seg;
        double t = (u - cdf[seg - 1]) / std::max(cdf[seg] - cdf[seg - 1], 1e-300);
        e.positions(i, 0) = lo + dx * (seg - 1) + t * dx;
    }
    for (int i = 1; i < grid_n; ++i) {
        double x0 = lo + dx * (i - 1), x1 = lo + dx * i;
        integral += 0.5 * (std::cos(x0) * std::cos(x0) * dens[i - 1] +
                           std::cos(x1) * std::cos(x1) * dens[i]) *
                    dx;
    }
    Witness w;
    w.grad = [](const RowVec& x) { return rv({std::cos(x[0])}); };
    double est = grad_norm_estimate(w, e);
    CHECK(std::fabs(est - integral) / integral < 1e-3);
}

TEST_CASE("objective_estimate per kind") {
    Space e1 = Space::euclidean(1);
    Kernel k(e1, 1.0);

    // linear lifted: mean of g over particles
    FunctionalSpec lifted;
    lifted.kind = FunctionalKind::LinearLifted;
    lifted.backend = WitnessBackend::ClosedForm;
    lifted.g.value = [](const RowVec& x) { return x[0] * x[0]; };
    lifted.g.grad = [](const RowVec& x) { return rv({2.0 * x[0]}); };
    Ensemble pm;
    pm.space = e1;
    pm.positions.resize(2, 1);
    pm.positions << -1.0, 1.0;
    Witness wl = solve_witness(lifted, pm, k, 1e-3, 0);
    CHECK(*objective_estimate(lifted, pm, wl) == 1.0);

    // score backends have no plug-in objective
    FunctionalSpec klspec;
    klspec.kind = FunctionalKind::KL;
    klspec.backend = WitnessBackend::KDEScore;
    klspec.target_score = gaussian_score_model(rv({0}), rv({1}));
    Ensemble e = sample_init(e1, GaussianInit{rv({0}), rv({1})}, 50, 8);
    Witness wk = solve_witness(klspec, e, k, 1e-3, 0);
    CHECK_FALSE(objective_estimate(klspec, e, wk).has_value());
}

TEST_CASE("chi2 dual value against the closed form, small instance") {
    Space e1 = Space::euclidean(1);
    const int n = 1500;
    Ensemble p = sample_init(e1, GaussianInit{rv({0.5}), rv({1})}, n, 9);
    FunctionalSpec spec;
    spec.kind = FunctionalKind::Chi2;
    spec.backend = WitnessBackend::RKHSDual;
    spec.target_samples =
        sample_init(e1, GaussianInit{rv({0}), rv({1})}, n, 10).positions;
    Kernel k(e1, Kernel::median_heuristic(spec.target_samples, e1));
    WitnessSolveInfo info;
    Witness w = solve_witness(spec, p, k, default_lambda(n), 1, &info);
    REQUIRE(info.dual_value.has_value());
    CHECK(*objective_estimate(spec, p, w, &info) == *info.dual_value);
    CHECK(std::fabs(*info.dual_value - (std::exp(0.25) - 1.0)) < 0.1);
}

TEST_CASE("cross-backend consistency on the 1-D double-well") {
    // Burn the ensemble in with the KDE backend, then compare the KDE and
    // RKHS-dual witness gradients on the same particles.
    Space e1 = Space::euclidean(1);
    const int n = 2000;
    FunctionalSpec kde_spec = entropy_spec(WitnessBackend::KDEScore, 0);
    Kernel k(e1, 0.8);

    TransportConfig cfg;
    cfg.alpha = 0.05;
    cfg.iters = 150;
    cfg.n_particles = n;
    cfg.seed = 99;
    cfg.safeguard = true;
    RunResult burn = run_direct(cfg, kde_spec, k, GaussianInit{rv({0}), rv({2})},
                                e1, DiagnosticsPlan{});
    const Ensemble& e = burn.final_ensemble;

    Witness w_kde = solve_witness(kde_spec, e, k, default_lambda(n), 7);

    FunctionalSpec rkhs_spec = entropy_spec(WitnessBackend::RKHSDual, 0);
    rkhs_spec.solver.basis_cap = 700;
    // lambda at the stable edge for this n; smaller values let the dual fit
    // sampling noise and the backends drift apart.
    const double lambda = 1.5 / std::sqrt(static_cast<double>(n));
    Witness w_rkhs = solve_witness(rkhs_spec, e, k, lambda, 7);

    RowMat g1 = w_kde.eval_grad(e.positions);
    RowMat g2 = w_rkhs.eval_grad(e.positions);
    double mse = (g1 - g2).array().square().sum() / n;
    CHECK(mse < 0.05);
}
