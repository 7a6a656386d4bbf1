#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "dlsslab/grid.hpp"

namespace dlss {

inline constexpr double kMassTolerance = 1e-12;

/// Nonnegative grid function with unit delta-mass.
class Density {
public:
    /// Throws InvalidArgument on a negative entry or |mass - 1| > mass_tol.
    explicit Density(GridFunction base, double mass_tol = kMassTolerance);
    Density(Grid grid, std::vector<double> values, double mass_tol = kMassTolerance)
        : Density(GridFunction(grid, std::move(values)), mass_tol) {}

    static Density uniform(Grid grid);

    const GridFunction& base() const noexcept { return base_; }
    const Grid& grid() const noexcept { return base_.grid(); }
    std::size_t size() const noexcept { return base_.size(); }
    double operator[](std::size_t k) const noexcept { return base_[k]; }
    double at(int k) const noexcept { return base_.at(k); }
    std::span<const double> values() const noexcept { return base_.values(); }
    const std::vector<double>& vector() const noexcept { return base_.vector(); }

    double mass() const noexcept { return base_.integral(); }
    double min_value() const noexcept;
    double max_value() const noexcept;

private:
    GridFunction base_;
};

bool is_positive(const Density& rho) noexcept;

/// Density on the unit circle given by a pointwise evaluator.
struct ContinuousDatum {
    std::string name;
    std::function<double(double)> density;
    /// Exact integral over [a, b]; quadrature is used when absent.
    std::function<double(double, double)> integral;
    /// Derivative of sqrt(density), used for the continuous Fisher information.
    std::function<double(double)> sqrt_derivative;
};

ContinuousDatum uniform_datum();

/// Z^{-1} (sqrt(eps) + ((1 + cos 2 pi x)/2)^m)^2.
ContinuousDatum bls_datum(int m, double eps);

/// Normalizing constant of the BLS datum, by adaptive quadrature.
double bls_normalization(int m, double eps);

/// Integral of f over [a, b] by adaptive Gauss-Kronrod, relative tolerance tol.
/// Throws QuadratureFailure when the error estimate exceeds the tolerance.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-10);

/// Cell averages of the datum over ((k - 1/2) delta, (k + 1/2) delta).
GridFunction cell_averages(const ContinuousDatum& datum, const Grid& grid, double tol = 1e-10);

/// (1 + delta)^{-1} (cell_averages + delta).
Density project_initial(const ContinuousDatum& datum, const Grid& grid);

/// Piecewise-constant reconstruction at x.
double reconstruct(const GridFunction& f, double x) noexcept;
inline double reconstruct(const Density& rho, double x) noexcept { return reconstruct(rho.base(), x); }

double hellinger(const Density& rho, const Density& eta);

/// Deterministic random element of the positive densities with entries >= min_value.
Density random_positive_density(const Grid& grid, std::uint64_t seed, double min_value = 0.05);

/// 2 * integral of |(sqrt rho)'|^2 for a datum with sqrt_derivative.
double continuous_fisher(const ContinuousDatum& datum);
/// Integral of rho log rho - rho + 1.
double continuous_entropy(const ContinuousDatum& datum);

}  // namespace dlss
