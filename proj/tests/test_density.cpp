#include <cmath>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "dlsslab/density.hpp"
#include "dlsslab/error.hpp"
#include "dlsslab/functionals.hpp"

using namespace dlss;

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Closed form of the BLS normalization via the moments of cos^{2j}(pi x).
double bls_z_closed(int m, double eps) {
    return eps + 2.0 * std::sqrt(eps) * binom(2 * m, m) / std::pow(4.0, m) + binom(4 * m, 2 * m) / std::pow(16.0, m);
}

double bls_unnormalized(int m, double eps, double x) {
    const double c = std::pow(0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * x)), m);
    return (std::sqrt(eps) + c) * (std::sqrt(eps) + c);
}

}  // namespace

TEST_CASE("BLS normalization") {
    const double eps = 0.001;
    // Trapezoid oracle with 10^6 points; spectrally accurate for periodic data.
    const int pts = 1000000;
    double s = 0.0;
    for (int i = 0; i < pts; ++i) s += bls_unnormalized(1, eps, static_cast<double>(i) / pts);
    s /= pts;
    CHECK(bls_normalization(1, eps) == doctest::Approx(s).epsilon(1e-12));
    for (int m : {1, 2, 8, 16})
        CHECK(bls_normalization(m, eps) == doctest::Approx(bls_z_closed(m, eps)).epsilon(1e-12));
    const ContinuousDatum d = bls_datum(60, eps);
    CHECK(d.density(0.4) == doctest::Approx(eps / bls_z_closed(60, eps)).epsilon(1e-9));
    CHECK_THROWS_AS(bls_datum(0, eps), Error);
    CHECK_THROWS_AS(bls_datum(1, 0.0), Error);
}

TEST_CASE("projection of the initial datum") {
    for (int n : {2, 5, 32}) {
        const Density u = project_initial(uniform_datum(), Grid(n));
        for (double v : u.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    }
    for (int m : {1, 2, 8, 16})
        for (int n : {8, 32, 128}) {
            const Grid g(n);
            const Density r = project_initial(bls_datum(m, 0.001), g);
            CHECK(std::abs(r.mass() - 1.0) <= 1e-12);
            CHECK(is_positive(r));
            CHECK(r.min_value() >= g.delta() / (1.0 + g.delta()) * (1 - 1e-15));
        }
    // Midpoint-rule oracle with 10^5 points per cell and the closed-form Z.
    const Grid g(8);
    const double eps = 0.001;
    const double z = bls_z_closed(1, eps);
    const Density r = project_initial(bls_datum(1, eps), g);
    const int pts = 100000;
    for (int k = 0; k < 8; ++k) {
        double s = 0.0;
        for (int i = 0; i < pts; ++i) s += bls_unnormalized(1, eps, g.cell_left(k) + (i + 0.5) * g.delta() / pts);
        const double avg = s / pts / z;
        const double expect = (avg + g.delta()) / (1.0 + g.delta());
        CHECK(std::abs(r[static_cast<std::size_t>(k)] - expect) <= 1e-8);
    }
}

TEST_CASE("density membership") {
    const Grid g(2);
    CHECK(is_positive(Density::uniform(g)));
    CHECK_FALSE(is_positive(Density(g, {2.0, 0.0})));
    CHECK_THROWS_AS(Density(g, {2.5, -0.5}), Error);
    CHECK_THROWS_AS(Density(g, {1.0, 2.0}), Error);
}

TEST_CASE("reconstruction and its adjoint") {
    const Grid g(4);
    const Density u = Density::uniform(g);
    for (double x : {0.0, 0.3, 0.99}) CHECK(reconstruct(u, x) == 1.0);
    const Density r(g, {0.5, 1.5, 1.0, 1.0});
    CHECK(reconstruct(r, 0.25) == 1.5);
    CHECK(reconstruct(r, 0.125) == 1.5);
    CHECK(reconstruct(r, 0.97) == 0.5);
    // <Pi f, g>_{L2} = <f, g_hat>_delta for g piecewise constant on another grid.
    for (auto [n, m] : {std::pair{4, 6}, std::pair{5, 3}, std::pair{8, 8}, std::pair{7, 12}}) {
        const Grid gn(n), gm(m);
        std::vector<double> fv(gn.size()), gv(gm.size());
        for (int k = 0; k < n; ++k) fv[static_cast<std::size_t>(k)] = std::sin(1.0 + k);
        for (int k = 0; k < m; ++k) gv[static_cast<std::size_t>(k)] = std::cos(0.3 * k * k);
        const GridFunction f(gn, fv), gf(gm, gv);
        const int sub = 2 * std::lcm(n, m);
        double lhs = 0.0;
        for (int i = 0; i < sub; ++i) {
            const double x = (i + 0.5) / sub;
            lhs += reconstruct(f, x) * reconstruct(gf, x) / sub;
        }
        ContinuousDatum gd;
        gd.density = [&](double x) { return reconstruct(gf, x); };
        double rhs = 0.0;
        for (int k = 0; k < n; ++k) {
            double avg = 0.0;
            const int per = sub / n;
            const double left = gn.cell_left(k);
            for (int i = 0; i < per; ++i) avg += gd.density(left + (i + 0.5) / sub) / per;
            rhs += fv[static_cast<std::size_t>(k)] * avg * gn.delta();
        }
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    }
}

TEST_CASE("Hellinger distance") {
    const Grid g(2);
    const Density a(g, {2.0, 0.0}), b(g, {0.0, 2.0});
    CHECK(hellinger(a, b) == doctest::Approx(std::sqrt(2.0)));
    CHECK(hellinger(a, a) == 0.0);
    const Grid g9(9);
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Density x = random_positive_density(g9, 3 * s, 0.0);
        const Density y = random_positive_density(g9, 3 * s + 1, 0.0);
        const Density z = random_positive_density(g9, 3 * s + 2, 0.0);
        CHECK(hellinger(x, y) == doctest::Approx(hellinger(y, x)));
        CHECK(hellinger(x, z) <= hellinger(x, y) + hellinger(y, z) + 1e-15);
        CHECK(hellinger(x, y) * hellinger(x, y) <= 2.0);
        CHECK(hellinger(x, y) > 0.0);
    }
}

TEST_CASE("random positive densities") {
    const Grid g(16);
    const Density a = random_positive_density(g, 42, 0.1);
    const Density b = random_positive_density(g, 42, 0.1);
    CHECK(a.vector() == b.vector());
    CHECK(std::abs(a.mass() - 1.0) <= 1e-12);
    CHECK(a.min_value() >= 0.1);
    CHECK(random_positive_density(g, 43, 0.1).vector() != a.vector());
}

TEST_CASE("Fisher information of the projected datum") {
    for (int m : {1, 2, 8}) {
        const ContinuousDatum d = bls_datum(m, 0.001);
        const double fc = continuous_fisher(d);
        for (int n : {4, 8, 16, 32, 64, 128}) {
            const GridFunction avg = cell_averages(d, Grid(n));
            CHECK(fisher(avg) <= 8.0 * fc);
        }
    }
    // Fisher information of sqrt = 1 + a cos(2 pi x) checked against the analytic derivative.
    ContinuousDatum s;
    const double a = 0.3;
    s.density = [=](double x) { return std::pow(1 + a * std::cos(2 * std::numbers::pi * x), 2) / (1 + a * a / 2); };
    s.sqrt_derivative = [=](double x) {
        return -a * 2 * std::numbers::pi * std::sin(2 * std::numbers::pi * x) / std::sqrt(1 + a * a / 2);
    };
    const double pi2 = std::numbers::pi * std::numbers::pi;
    CHECK(continuous_fisher(s) == doctest::Approx(2 * a * a * 4 * pi2 / 2 / (1 + a * a / 2)).epsilon(1e-10));
}
