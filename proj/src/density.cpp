#include "dlsslab/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dlsslab/error.hpp"

namespace dlss {

namespace {

constexpr double kPi = std::numbers::pi;

void check_density(const GridFunction& f, double mass_tol) {
    for (double v : f.values())
        if (v < 0.0) throw Error(ErrorCode::InvalidArgument, "density has a negative entry");
    const double m = f.integral();
    if (!(std::abs(m - 1.0) <= mass_tol))
        throw Error(ErrorCode::InvalidArgument, "density mass " + std::to_string(m) + " is not 1");
}

}  // namespace

Density::Density(GridFunction base, double mass_tol) : base_(std::move(base)) {
    check_density(base_, mass_tol);
}

Density Density::uniform(Grid grid) { return Density(GridFunction::constant(grid, 1.0)); }

double Density::min_value() const noexcept {
    return *std::min_element(base_.vector().begin(), base_.vector().end());
}

double Density::max_value() const noexcept {
    return *std::max_element(base_.vector().begin(), base_.vector().end());
}

bool is_positive(const Density& rho) noexcept { return rho.min_value() > 0.0; }

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    double err = 0.0;
    double l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &err, &l1);
    if (!std::isfinite(v) || err > tol * std::max(l1, 1e-300) * 10.0)
        throw Error(ErrorCode::QuadratureFailure, "quadrature on [" + std::to_string(a) + ", " + std::to_string(b) +
                                                      "] did not reach tolerance");
    return v;
}

ContinuousDatum uniform_datum() {
    ContinuousDatum d;
    d.name = "uniform";
    d.density = [](double) { return 1.0; };
    d.integral = [](double a, double b) { return b - a; };
    d.sqrt_derivative = [](double) { return 0.0; };
    return d;
}

double bls_normalization(int m, double eps) {
    const double se = std::sqrt(eps);
    auto g = [=](double x) {
        const double c = std::pow(0.5 * (1.0 + std::cos(2.0 * kPi * x)), m);
        return (se + c) * (se + c);
    };
    // Centre the peak at 0 so the integrand is smooth on each half.
    return integrate(g, -0.5, 0.0, 1e-13) + integrate(g, 0.0, 0.5, 1e-13);
}

ContinuousDatum bls_datum(int m, double eps) {
    if (m < 1) throw Error(ErrorCode::InvalidArgument, "bls datum needs m >= 1");
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "bls datum needs eps > 0");
    const double z = bls_normalization(m, eps);
    const double se = std::sqrt(eps);
    const double rz = 1.0 / std::sqrt(z);
    ContinuousDatum d;
    d.name = "bls:m=" + std::to_string(m) + ",eps=" + std::to_string(eps);
    d.density = [=](double x) {
        const double c = std::pow(0.5 * (1.0 + std::cos(2.0 * kPi * x)), m);
        return (se + c) * (se + c) / z;
    };
    d.sqrt_derivative = [=](double x) {
        const double c = 0.5 * (1.0 + std::cos(2.0 * kPi * x));
        return rz * m * std::pow(c, m - 1) * (-kPi * std::sin(2.0 * kPi * x));
    };
    return d;
}

GridFunction cell_averages(const ContinuousDatum& datum, const Grid& grid, double tol) {
    std::vector<double> v(grid.size());
    const double d = grid.delta();
    for (int k = 0; k < grid.n(); ++k) {
        const double a = grid.cell_left(k);
        const double b = grid.cell_right(k);
        const double s = datum.integral ? datum.integral(a, b) : integrate(datum.density, a, b, tol);
        v[static_cast<std::size_t>(k)] = s / d;
    }
    return GridFunction(grid, std::move(v));
}

Density project_initial(const ContinuousDatum& datum, const Grid& grid) {
    const GridFunction avg = cell_averages(datum, grid);
    const double mass = avg.integral();
    const double d = grid.delta();
    std::vector<double> v(grid.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = (avg[k] / mass + d) / (1.0 + d);
    return Density(grid, std::move(v));
}

double reconstruct(const GridFunction& f, double x) noexcept {
    return f[static_cast<std::size_t>(f.grid().cell_of(x))];
}

double hellinger(const Density& rho, const Density& eta) {
    if (!(rho.grid() == eta.grid())) throw Error(ErrorCode::InvalidArgument, "grid mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k) {
        const double e = std::sqrt(rho[k]) - std::sqrt(eta[k]);
        s += e * e;
    }
    return std::sqrt(s * rho.grid().delta());
}

Density random_positive_density(const Grid& grid, std::uint64_t seed, double min_value) {
    if (!(min_value >= 0.0 && min_value < 1.0))
        throw Error(ErrorCode::InvalidArgument, "min_value must lie in [0, 1)");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(grid.size());
    double s = 0.0;
    for (double& x : v) {
        x = u(rng) + 1e-3;
        s += x;
    }
    s *= grid.delta();
    for (double& x : v) x = min_value + (1.0 - min_value) * x / s;
    return Density(grid, std::move(v));
}

double continuous_fisher(const ContinuousDatum& datum) {
    if (!datum.sqrt_derivative) throw Error(ErrorCode::InvalidArgument, "datum has no sqrt derivative");
    auto f = [&](double x) {
        const double g = datum.sqrt_derivative(x);
        return g * g;
    };
    return 2.0 * (integrate(f, -0.5, 0.0, 1e-12) + integrate(f, 0.0, 0.5, 1e-12));
}

double continuous_entropy(const ContinuousDatum& datum) {
    auto f = [&](double x) {
        const double r = datum.density(x);
        return r > 0.0 ? r * std::log(r) - r + 1.0 : 1.0;
    };
    return integrate(f, -0.5, 0.0, 1e-12) + integrate(f, 0.0, 0.5, 1e-12);
}

}  // namespace dlss
