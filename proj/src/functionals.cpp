#include "dlsslab/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlsslab/error.hpp"
#include "dlsslab/flow.hpp"
#include "stencil.hpp"

namespace dlss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(const GridFunction& rho, const char* what) {
    for (double v : rho.values())
        if (!(v > 0.0)) throw Error(ErrorCode::PositivityRequired, std::string(what) + " needs a positive density");
}

}  // namespace

double eta(double s) noexcept {
    if (s == 0.0) return 1.0;
    return detail::eta_shift(1.0 - s);
}

double entropy(const GridFunction& rho) {
    double s = 0.0;
    for (double v : rho.values()) s += eta(v);
    return s * rho.grid().delta();
}

GridFunction entropy_gradient(const GridFunction& rho) {
    require_positive(rho, "entropy_gradient");
    std::vector<double> g(rho.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = std::log(rho[k]);
    return GridFunction(rho.grid(), std::move(g));
}

double fisher(const GridFunction& rho) {
    const int n = rho.grid().n();
    const double d = rho.grid().delta();
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
        const double e = (std::sqrt(rho.at(k + 1)) - std::sqrt(rho.at(k))) / d;
        s += e * e;
    }
    return 2.0 * d * s;
}

GridFunction fisher_gradient(const GridFunction& rho) {
    require_positive(rho, "fisher_gradient");
    const int n = rho.grid().n();
    const double d = rho.grid().delta();
    std::vector<double> g(rho.size());
    for (int k = 0; k < n; ++k)
        g[static_cast<std::size_t>(k)] =
            2.0 / (d * d) * (2.0 - (std::sqrt(rho.at(k + 1)) + std::sqrt(rho.at(k - 1))) / std::sqrt(rho.at(k)));
    return GridFunction(rho.grid(), std::move(g));
}

double heat_capacity(const GridFunction& rho) {
    double s = 0.0;
    for (double v : rho.values()) {
        if (!(v > 0.0)) return kInf;
        s += std::log(v);
    }
    return -s * rho.grid().delta();
}

double entropy_dissipation(const GridFunction& rho) {
    require_positive(rho, "entropy_dissipation");
    const int n = rho.grid().n();
    const double d = rho.grid().delta();
    const double d2 = d * d;
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
        const double r = rho.at(k), rp = rho.at(k + 1), rm = rho.at(k - 1);
        const double gap = -detail::sqrt_gap(r, rp, rm) / d2;
        const double lg = (0.5 * (std::log(rp) + std::log(rm)) - std::log(r)) / d2;
        s += gap * lg;
    }
    return 4.0 * d * s;
}

double laplacian_sqrt_energy(const GridFunction& rho) {
    std::vector<double> q(rho.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = std::sqrt(rho[k]);
    const GridFunction l = laplacian(GridFunction(rho.grid(), std::move(q)));
    return inner_delta(l, l);
}

double log_laplacian_energy(const GridFunction& rho) {
    const GridFunction l = laplacian(entropy_gradient(rho));
    return inner_delta(l, l);
}

double log_oscillation(const GridFunction& rho) {
    require_positive(rho, "log_oscillation");
    const auto [lo, hi] = std::minmax_element(rho.vector().begin(), rho.vector().end());
    return std::log(*hi) - std::log(*lo);
}

FunctionalValues evaluate_functionals(const GridFunction& rho) {
    FunctionalValues v;
    v.entropy = entropy(rho);
    v.fisher = fisher(rho);
    v.heat_capacity = heat_capacity(rho);
    v.min_density = *std::min_element(rho.vector().begin(), rho.vector().end());
    v.mass = rho.integral();
    return v;
}

double ggs_dual_potential(const GridFunction& rho, const GridFunction& xi) {
    const double d = rho.grid().delta();
    const double a = 2.0 / (d * d);
    double s = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) s += rho[k] * a * a * detail::expm1_defect(xi[k] / a);
    return d * s;
}

namespace {

double potential_sum(const GridFunction& rho, const GridFunction& w) {
    const double d = rho.grid().delta();
    const double a = 2.0 / (d * d);
    double s = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) {
        const double r = rho[k];
        if (w[k] == 0.0) continue;
        if (!(r > 0.0)) return kInf;
        const double x = w[k] / (a * r);
        if (x > 1.0) return kInf;
        s += r * detail::eta_shift(x);
    }
    return d * s;
}

}  // namespace

double ggs_potential(const GridFunction& rho, const GridFunction& w) {
    const double d = rho.grid().delta();
    return 4.0 / (d * d * d * d) * potential_sum(rho, w);
}

double ggs_potential_as_printed(const GridFunction& rho, const GridFunction& w) { return potential_sum(rho, w); }

DualityCheck ggs_duality_check(const GridFunction& rho, const GridFunction& w) {
    // Cellwise sup_xi (xi w - R*_k(xi)) by Newton on the concave objective.
    const double d = rho.grid().delta();
    const double a = 2.0 / (d * d);
    double s = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) {
        const double r = rho[k];
        if (w[k] == 0.0) continue;
        if (w[k] >= a * r) {
            s = kInf;
            break;
        }
        double xi = 0.0;
        for (int it = 0; it < 200; ++it) {
            const double e = std::exp(-xi / a);
            const double g = w[k] - r * a * (1.0 - e);
            const double h = -r * e;
            const double step = -g / h;
            xi += step;
            if (std::abs(step) <= 1e-15 * (1.0 + std::abs(xi))) break;
        }
        s += xi * w[k] - r * a * a * detail::expm1_defect(xi / a);
    }
    DualityCheck c;
    c.numerical = d * s;
    c.consistent = ggs_potential(rho, w);
    c.as_printed = ggs_potential_as_printed(rho, w);
    auto rel = [&](double v) {
        if (c.numerical == v) return 0.0;
        return std::abs(v - c.numerical) / std::max(std::abs(c.numerical), 1e-300);
    };
    c.consistent_rel_error = rel(c.consistent);
    c.as_printed_rel_error = rel(c.as_printed);
    return c;
}

double fenchel_gap(const GridFunction& rho, const GridFunction& w) {
    const GridFunction xi = laplacian(entropy_gradient(rho)) * -1.0;
    return ggs_potential(rho, w) + ggs_dual_potential(rho, xi) - inner_delta(xi, w);
}

double fenchel_gap(const GridFunction& rho) {
    require_positive(rho, "fenchel_gap");
    return fenchel_gap(rho, flux(rho));
}

}  // namespace dlss
