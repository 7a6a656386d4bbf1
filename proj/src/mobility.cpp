#include "dlsslab/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace dlss {

double geometric_mean(double a, double b) noexcept { return a == b ? a : std::sqrt(a) * std::sqrt(b); }

double logarithmic_mean(double a, double b) noexcept {
    if (a <= 0.0 || b <= 0.0) return 0.0;
    if (a == b) return a;
    const double h = std::log(a) - std::log(b);
    const double m = std::sqrt(a) * std::sqrt(b);
    if (std::abs(h) < 1e-8) return m * (1.0 + h * h / 24.0);
    const double x = 0.5 * h;
    return m * std::sinh(x) / x;
}

double mobility(double r0, double rp, double rm) noexcept {
    if (r0 <= 0.0 || rp <= 0.0 || rm <= 0.0) return 0.0;
    return logarithmic_mean(r0, geometric_mean(rp, rm));
}

GridFunction mobility_field(const GridFunction& rho) {
    const int n = rho.grid().n();
    std::vector<double> m(rho.size());
    for (int k = 0; k < n; ++k) m[static_cast<std::size_t>(k)] = mobility(rho.at(k), rho.at(k + 1), rho.at(k - 1));
    return GridFunction(rho.grid(), std::move(m));
}

namespace {

// mu_j(h) = int_0^1 t^j e^{t h} dt for j = 0, 1, 2.
std::array<double, 3> moments(double h) noexcept {
    std::array<double, 3> mu{};
    if (std::abs(h) <= 2.0) {
        double term = 1.0;  // h^n / n!
        for (int n = 0; n < 40; ++n) {
            mu[0] += term / (n + 1);
            mu[1] += term / (n + 2);
            mu[2] += term / (n + 3);
            term *= h / (n + 1);
        }
        return mu;
    }
    const double e = std::exp(h);
    mu[0] = (e - 1.0) / h;
    mu[1] = (e * (h - 1.0) + 1.0) / (h * h);
    mu[2] = (e * (h * h - 2.0 * h + 2.0) - 2.0) / (h * h * h);
    return mu;
}

}  // namespace

MobilityDerivatives mobility_derivatives(double a, double b, double c) noexcept {
    // M = a phi(h), h = (log b + log c)/2 - log a, phi(h) = (e^h - 1)/h.
    const double h = 0.5 * (std::log(b) + std::log(c)) - std::log(a);
    const auto [p0, p1, p2] = moments(h);
    MobilityDerivatives d{};
    d.value = a * p0;
    d.grad = {p0 - p1, a * p1 / (2.0 * b), a * p1 / (2.0 * c)};
    const double haa = (p2 - p1) / a;
    const double hab = (p1 - p2) / (2.0 * b);
    const double hac = (p1 - p2) / (2.0 * c);
    const double hbb = a * (p2 - 2.0 * p1) / (4.0 * b * b);
    const double hbc = a * p2 / (4.0 * b * c);
    const double hcc = a * (p2 - 2.0 * p1) / (4.0 * c * c);
    d.hess = {{{haa, hab, hac}, {hab, hbb, hbc}, {hac, hbc, hcc}}};
    return d;
}

AdmissibilityReport admissibility_report(int samples, std::uint64_t seed) {
    AdmissibilityReport rep;
    rep.samples = samples;
    rep.worst_concavity_margin = INFINITY;
    rep.worst_comparison_margin = INFINITY;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ex(-6.0, 6.0);
    std::uniform_real_distribution<double> lam(0.01, 100.0);
    auto draw = [&] { return std::exp(ex(rng)); };
    auto fail = [&](const std::string& what, double a, double b, double c) {
        std::ostringstream os;
        os.precision(17);
        os << what << " at (" << a << ", " << b << ", " << c << ")";
        rep.counterexamples.push_back(os.str());
    };
    for (int i = 0; i < samples; ++i) {
        const double a = draw(), b = draw(), c = draw();
        const double m = mobility(a, b, c);
        if (!std::isfinite(m)) fail("non-finite value", a, b, c);
        if (mobility(a, c, b) != m) fail("asymmetry in neighbours", a, b, c);
        const double lo = std::min({a, b, c}), hi = std::max({a, b, c});
        if (m < lo * (1.0 - 1e-12) || m > hi * (1.0 + 1e-12)) fail("outside [min, max]", a, b, c);
        const double l = lam(rng);
        if (std::abs(mobility(l * a, l * b, l * c) - l * m) > 1e-12 * l * m) fail("not 1-homogeneous", a, b, c);
        const double a2 = draw(), b2 = draw(), c2 = draw();
        const double mid = mobility(0.5 * (a + a2), 0.5 * (b + b2), 0.5 * (c + c2));
        const double avg = 0.5 * (m + mobility(a2, b2, c2));
        const double scale = std::max({a, b, c, a2, b2, c2});
        const double cm = (mid - avg) / scale;
        rep.worst_concavity_margin = std::min(rep.worst_concavity_margin, cm);
        if (cm < -1e-12) fail("midpoint concavity", a, b, c);
        const double lower = logarithmic_mean(a, std::min(b, c));
        const double upper = logarithmic_mean(a, std::max(b, c));
        const double cmp = std::min(m - lower, upper - m) / hi;
        rep.worst_comparison_margin = std::min(rep.worst_comparison_margin, cmp);
        if (cmp < -1e-12) fail("comparison with logarithmic means", a, b, c);
    }
    if (mobility(0.0, 1.0, 2.0) != 0.0 || mobility(1.0, 0.0, 2.0) != 0.0 || mobility(1.0, 2.0, 0.0) != 0.0)
        fail("nonzero value with a zero argument", 0.0, 1.0, 2.0);
    return rep;
}

}  // namespace dlss
