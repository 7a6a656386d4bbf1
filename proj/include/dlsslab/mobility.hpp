#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dlsslab/density.hpp"

namespace dlss {

double geometric_mean(double a, double b) noexcept;
/// (a - b) / (log a - log b), with Lambda(a, a) = a and Lambda(a, 0) = 0.
double logarithmic_mean(double a, double b) noexcept;

/// M(r0, r+, r-) = Lambda(r0, G(r+, r-)).
double mobility(double r0, double rp, double rm) noexcept;

/// M_k = M(rho_k, rho_{k+1}, rho_{k-1}).
GridFunction mobility_field(const GridFunction& rho);
inline GridFunction mobility_field(const Density& rho) { return mobility_field(rho.base()); }

/// Value, gradient and Hessian of M with respect to (r0, r+, r-); all arguments > 0.
struct MobilityDerivatives {
    double value;
    std::array<double, 3> grad;
    std::array<std::array<double, 3>, 3> hess;
};
MobilityDerivatives mobility_derivatives(double r0, double rp, double rm) noexcept;

struct AdmissibilityReport {
    int samples = 0;
    std::vector<std::string> counterexamples;
    double worst_concavity_margin = 0.0;
    double worst_comparison_margin = 0.0;
    bool ok() const noexcept { return counterexamples.empty(); }
};

AdmissibilityReport admissibility_report(int samples, std::uint64_t seed);

}  // namespace dlss
