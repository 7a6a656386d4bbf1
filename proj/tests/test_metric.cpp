#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "dlsslab/error.hpp"
#include "dlsslab/functionals.hpp"
#include "dlsslab/metric.hpp"
#include "dlsslab/mobility.hpp"
#include "metric_oracle.hpp"

using namespace dlss;
using oracle::ReducedOracle;
using oracle::bfgs;

namespace {

Density pair_density(const Grid& g, std::vector<double> v) { return Density(GridFunction(g, std::move(v))); }

}  // namespace

TEST_CASE("relaxed quotient") {
    CHECK(relaxed_quotient(0, 0) == 0);
    CHECK(std::isinf(relaxed_quotient(1, 0)));
    CHECK(std::isinf(relaxed_quotient(0, -1)));
    CHECK(relaxed_quotient(3, 2) == 4.5);
}

TEST_CASE("action of constant and reversed curves") {
    const Grid g(6);
    const Density r = random_positive_density(g, 3);
    Curve c;
    c.grid = g;
    c.rho.assign(9, r.base());
    c.w.assign(8, GridFunction::zeros(g));
    c.ds.assign(8, 1.0 / 8);
    CHECK(action(c) == 0);
    const Density s = random_positive_density(g, 4);
    c = connecting_curve(r, s, 10);
    CHECK(action(reversed(c)) == doctest::Approx(action(c)).epsilon(1e-13));
    Curve z = c;
    z.rule = MobilityRule::RightEndpoint;
    z.w[2] = z.w[2] + GridFunction::constant(g, 1.0);
    z.rho[3] = GridFunction(g, std::vector<double>(6, 0.0));
    CHECK(std::isinf(action(z)));
}

TEST_CASE("connecting curve") {
    for (int n : {2, 5, 16}) {
        const Grid g(n);
        const Density a = random_positive_density(g, 10 + static_cast<std::uint64_t>(n));
        const Density b = random_positive_density(g, 20 + static_cast<std::uint64_t>(n));
        const Curve c = connecting_curve(a, b, 64);
        CHECK(c.rho.front().vector() == a.vector());
        CHECK(c.rho.back().vector() == b.vector());
        CHECK(c.continuity_residual() <= 1e-9);
        const GridFunction wa = inv_laplacian(a.base() - GridFunction::constant(g, 1.0));
        const GridFunction wb = inv_laplacian(b.base() - GridFunction::constant(g, 1.0));
        const double bound = 8 * inner_delta(wa, wa) + 8 * inner_delta(wb, wb);
        CHECK(action(c) <= 1.1 * bound);
        CHECK(action(c) > 0);
    }
    const Grid g(4);
    const Curve u = connecting_curve(Density::uniform(g), Density::uniform(g), 4);
    CHECK(action(u) == 0);
}

TEST_CASE("lower bound by hand at N=2") {
    const Grid g(2);
    const Density a = pair_density(g, {0.5, 1.5});
    const Density b = pair_density(g, {1.5, 0.5});
    // (a - b) = (-1, 1), W = (1/16, -1/16), min_c delta sum |W - c| = 1/16
    CHECK(distance_lower(a, b) == doctest::Approx(1.0 / (16 * std::sqrt(3.0))).epsilon(1e-14));
    CHECK(distance_lower(a, a) == 0);
}

TEST_CASE("geodesic with equal endpoints") {
    const Grid g(5);
    const Density a = random_positive_density(g, 8);
    const GeodesicResult r = geodesic(a, a, MetricConfig{});
    CHECK(r.value == 0);
    CHECK(r.converged);
    CHECK(r.curve.slices() == 32);
}

TEST_CASE("geodesic matches a reduced quasi-Newton oracle at N=3, S=8") {
    const Grid g(3);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Density a = random_positive_density(g, seed, 0.2);
        const Density b = random_positive_density(g, seed + 100, 0.2);
        MetricConfig cfg;
        cfg.S = 8;
        cfg.rel_tol = 1e-12;
        const GeodesicResult r = geodesic(a, b, cfg);
        const Curve seedc = connecting_curve(a, b, 8);
        CHECK(r.value <= action(seedc));
        CHECK(r.curve.continuity_residual() <= 1e-9);

        ReducedOracle f{3, 8, a.vector(), b.vector()};
        Eigen::VectorXd x(7 * 2);
        for (int s = 1; s < 8; ++s)
            for (int k = 0; k < 2; ++k) x((s - 1) * 2 + k) = seedc.rho[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
        CHECK(f(x) <= action(seedc) * (1 + 1e-12));
        const double oracle = bfgs(f, x);
        CHECK(r.value == doctest::Approx(oracle).epsilon(1e-4));
    }
}

TEST_CASE("sandwich, symmetry and triangle inequality") {
    const Grid g(8);
    MetricConfig cfg;
    cfg.S = 16;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const Density a = random_positive_density(g, 3 * seed + 1);
        const Density b = random_positive_density(g, 3 * seed + 2);
        const Density c = random_positive_density(g, 3 * seed + 3);
        const GeodesicResult ab = geodesic(a, b, cfg);
        const GeodesicResult ba = geodesic(b, a, cfg);
        const GeodesicResult bc = geodesic(b, c, cfg);
        const GeodesicResult ac = geodesic(a, c, cfg);
        CHECK(ab.converged);
        CHECK(distance_lower(a, b) <= std::sqrt(ab.value));
        CHECK(ab.value <= action(connecting_curve(a, b, cfg.S)));
        CHECK(ab.value == doctest::Approx(ba.value).epsilon(1e-6));
        CHECK(action(reversed(ab.curve)) == doctest::Approx(ab.value).epsilon(1e-12));
        const double tol = 2 * cfg.rel_tol;
        CHECK(std::sqrt(ac.value) <= std::sqrt(ab.value) + std::sqrt(bc.value) + tol);
    }
}

TEST_CASE("action is convex along feasible curves") {
    const Grid g(7);
    MetricConfig cfg;
    cfg.S = 12;
    const Density a = random_positive_density(g, 41);
    const Density b = random_positive_density(g, 42);
    const Curve c1 = connecting_curve(a, b, cfg.S);
    const Curve c2 = geodesic(a, b, cfg).curve;
    const Curve m = average(c1, c2);
    CHECK(m.continuity_residual() <= 1e-9);
    CHECK(action(m) <= 0.5 * (action(c1) + action(c2)) + 1e-12);
}

TEST_CASE("distance report and refinement in S") {
    const Grid g(6);
    const Density a = random_positive_density(g, 5);
    const Density b = random_positive_density(g, 6);
    MetricConfig cfg;
    cfg.S = 8;
    const DistanceReport rep = distance_report(a, b, cfg);
    CHECK(rep.lower <= rep.upper_optimized);
    CHECK(rep.upper_optimized <= rep.upper_construction);
    CHECK(rep.converged);
    CHECK(std::abs(rep.upper_optimized_2s - rep.upper_optimized) <= 0.05 * rep.upper_optimized);
    CHECK(distance_upper(a, b, cfg) == doctest::Approx(rep.upper_optimized));
}

TEST_CASE("config validation") {
    MetricConfig cfg;
    cfg.S = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    const Grid g(4);
    CHECK_THROWS_AS(geodesic(Density::uniform(g), Density::uniform(g), cfg), Error);
}

TEST_CASE("trajectory curve bound") {
    const Grid g(32);
    SolverConfig sc;
    sc.t_max = 0.003;
    const Trajectory tr = simulate(project_initial(bls_datum(2, 1e-3), g), sc);
    const TrajectoryBound z = trajectory_curve_bound(tr, 0.001, 0.001);
    CHECK(z.action == 0);
    CHECK(z.holds);
    const TrajectoryBound tb = trajectory_curve_bound(tr, 0.001, 0.002);
    CHECK(tb.holds);
    CHECK(tb.action > 0);
    const Curve c = trajectory_curve(tr, 0.001, 0.002);
    CHECK(c.continuity_residual() <= 1e-6 * (tb.t1 - tb.t0) / c.ds.front() + 1e-9);
    MetricConfig cfg;
    cfg.S = 16;
    const Density r0(c.rho.front());
    const Density r1(c.rho.back());
    const GeodesicResult geo = geodesic(r0, r1, cfg);
    CHECK(geo.value <= tb.bound);

    SolverConfig flat;
    flat.t_max = 1e-4;
    const Trajectory still = simulate(Density::uniform(Grid(8)), flat);
    const TrajectoryBound s = trajectory_curve_bound(still, 0.0, still.t_final());
    CHECK(s.action == 0);
    CHECK(s.holds);
}

TEST_CASE("holder sample") {
    const Grid g(8);
    const Density a = random_positive_density(g, 71);
    const Density b = random_positive_density(g, 72);
    MetricConfig cfg;
    cfg.S = 8;
    const HolderSample h = holder_sample(a, b, cfg);
    CHECK(h.hellinger == doctest::Approx(hellinger(a, b)));
    CHECK(h.ratio == doctest::Approx(h.hellinger / std::pow(h.distance_upper, 1.0 / 12.0)));
    CHECK(holder_sample(a, a, cfg).ratio == 0);
}
