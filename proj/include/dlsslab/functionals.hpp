#pragma once

#include "dlsslab/density.hpp"

namespace dlss {

struct FunctionalValues {
    double entropy = 0.0;
    double fisher = 0.0;
    double heat_capacity = 0.0;  // +inf when some entry is zero
    double min_density = 0.0;
    double mass = 0.0;
};

/// s log s - s + 1, accurate near s = 1; 0 log 0 = 0.
double eta(double s) noexcept;

double entropy(const GridFunction& rho);
GridFunction entropy_gradient(const GridFunction& rho);
double fisher(const GridFunction& rho);
GridFunction fisher_gradient(const GridFunction& rho);
double heat_capacity(const GridFunction& rho);
double entropy_dissipation(const GridFunction& rho);
double laplacian_sqrt_energy(const GridFunction& rho);
/// delta * sum (laplacian log rho)^2.
double log_laplacian_energy(const GridFunction& rho);
/// max_k log rho_k - min_k log rho_k.
double log_oscillation(const GridFunction& rho);

FunctionalValues evaluate_functionals(const GridFunction& rho);

inline double entropy(const Density& r) { return entropy(r.base()); }
inline GridFunction entropy_gradient(const Density& r) { return entropy_gradient(r.base()); }
inline double fisher(const Density& r) { return fisher(r.base()); }
inline GridFunction fisher_gradient(const Density& r) { return fisher_gradient(r.base()); }
inline double heat_capacity(const Density& r) { return heat_capacity(r.base()); }
inline double entropy_dissipation(const Density& r) { return entropy_dissipation(r.base()); }
inline double laplacian_sqrt_energy(const Density& r) { return laplacian_sqrt_energy(r.base()); }
inline FunctionalValues evaluate_functionals(const Density& r) { return evaluate_functionals(r.base()); }

/// Dual dissipation potential
/// delta sum rho (2/delta^2) [ (2/delta^2)(exp(-delta^2 xi / 2) - 1) + xi ].
double ggs_dual_potential(const GridFunction& rho, const GridFunction& xi);

/// Legendre transform of ggs_dual_potential in xi:
/// (4/delta^4) delta sum rho eta(1 - delta^2 w / (2 rho)); +inf off the domain.
double ggs_potential(const GridFunction& rho, const GridFunction& w);

/// delta sum rho eta(1 - delta^2 w / (2 rho)) without the 4/delta^4 factor.
double ggs_potential_as_printed(const GridFunction& rho, const GridFunction& w);

/// Relative mismatch between ggs_potential_as_printed and a numerical
/// Legendre transform of ggs_dual_potential at (rho, w).
struct DualityCheck {
    double numerical = 0.0;
    double consistent = 0.0;
    double as_printed = 0.0;
    double consistent_rel_error = 0.0;
    double as_printed_rel_error = 0.0;
};
DualityCheck ggs_duality_check(const GridFunction& rho, const GridFunction& w);

/// R(rho, w) + R*(rho, xi) - <xi, w> with xi = -laplacian(log rho) and w the scheme flux.
double fenchel_gap(const GridFunction& rho);
/// Same with an arbitrary flux.
double fenchel_gap(const GridFunction& rho, const GridFunction& w);

inline double fenchel_gap(const Density& r) { return fenchel_gap(r.base()); }

}  // namespace dlss
