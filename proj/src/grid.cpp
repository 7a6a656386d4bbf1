#include "dlsslab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "dlsslab/error.hpp"

namespace dlss {

Grid::Grid(int n) : n_(n), delta_(0.0) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "grid needs n >= 2, got " + std::to_string(n));
    delta_ = 1.0 / n;
    if (std::abs(delta_ * n - 1.0) > 1e-15)
        throw Error(ErrorCode::InvalidArgument, "delta*n differs from 1");
}

int Grid::cell_of(double x) const noexcept {
    const double y = x - std::floor(x);
    return wrap(static_cast<int>(std::floor(y * n_ + 0.5)));
}

GridFunction::GridFunction(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw Error(ErrorCode::InvalidArgument, "grid function length " + std::to_string(values_.size()) +
                                                    " does not match grid size " + std::to_string(grid_.n()));
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "grid function has non-finite entry");
}

GridFunction GridFunction::constant(Grid grid, double c) {
    return GridFunction(grid, std::vector<double>(grid.size(), c));
}

GridFunction GridFunction::operator+(const GridFunction& o) const {
    if (!(grid_ == o.grid_)) throw Error(ErrorCode::InvalidArgument, "grid mismatch");
    std::vector<double> r(values_);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += o.values_[k];
    return GridFunction(grid_, std::move(r));
}

GridFunction GridFunction::operator-(const GridFunction& o) const {
    if (!(grid_ == o.grid_)) throw Error(ErrorCode::InvalidArgument, "grid mismatch");
    std::vector<double> r(values_);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= o.values_[k];
    return GridFunction(grid_, std::move(r));
}

GridFunction GridFunction::operator*(double s) const {
    std::vector<double> r(values_);
    for (double& v : r) v *= s;
    return GridFunction(grid_, std::move(r));
}

double GridFunction::integral() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * grid_.delta();
}

double GridFunction::max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

void forward_diff(std::span<const double> f, double delta, std::span<double> out) {
    const std::size_t n = f.size();
    for (std::size_t k = 0; k < n; ++k) out[k] = (f[(k + 1) % n] - f[k]) / delta;
}

void backward_diff(std::span<const double> f, double delta, std::span<double> out) {
    const std::size_t n = f.size();
    for (std::size_t k = 0; k < n; ++k) out[k] = (f[k] - f[(k + n - 1) % n]) / delta;
}

void laplacian(std::span<const double> f, double delta, std::span<double> out) {
    const std::size_t n = f.size();
    const double s = 1.0 / (delta * delta);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = (f[(k + 1) % n] + f[(k + n - 1) % n] - 2.0 * f[k]) * s;
}

void inv_laplacian(std::span<const double> f, double delta, std::span<double> out) {
    // Pin W_0 = 0; rows 1..n-1 form a Dirichlet tridiagonal system
    // (1, -2, 1) W = delta^2 f. Row 0 follows from the zero sum.
    const std::size_t n = f.size();
    const std::size_t m = n - 1;
    const double d2 = delta * delta;
    std::vector<double> c(m), d(m);
    double beta = -2.0;
    d[0] = d2 * f[1] / beta;
    c[0] = 1.0 / beta;
    for (std::size_t i = 1; i < m; ++i) {
        beta = -2.0 - c[i - 1];
        c[i] = 1.0 / beta;
        d[i] = (d2 * f[i + 1] - d[i - 1]) / beta;
    }
    out[0] = 0.0;
    out[m] = d[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) out[i + 1] = d[i] - c[i] * out[i + 2];
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += out[k];
    mean /= static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) out[k] -= mean;
}

namespace {

template <class Kernel>
GridFunction apply(const GridFunction& f, Kernel kernel) {
    std::vector<double> r(f.size());
    kernel(f.values(), f.grid().delta(), std::span<double>(r));
    return GridFunction(f.grid(), std::move(r));
}

void require_zero_mean(const GridFunction& f, double tol) {
    const double m = f.integral();
    if (!(std::abs(m) <= tol))
        throw Error(ErrorCode::NonZeroMean, "input has delta-average " + std::to_string(m) + ", expected zero");
}

}  // namespace

GridFunction forward_diff(const GridFunction& f) {
    return apply(f, [](auto a, double d, auto o) { forward_diff(a, d, o); });
}
GridFunction backward_diff(const GridFunction& f) {
    return apply(f, [](auto a, double d, auto o) { backward_diff(a, d, o); });
}
GridFunction laplacian(const GridFunction& f) {
    return apply(f, [](auto a, double d, auto o) { laplacian(a, d, o); });
}

GridFunction inv_laplacian(const GridFunction& f, double tol_mean) {
    require_zero_mean(f, tol_mean);
    return apply(f, [](auto a, double d, auto o) { inv_laplacian(a, d, o); });
}

double inner_delta(const GridFunction& f, const GridFunction& g) {
    if (!(f.grid() == g.grid())) throw Error(ErrorCode::InvalidArgument, "grid mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * g[k];
    return s * f.grid().delta();
}

double lp_norm(const GridFunction& f, double p) {
    if (!(p >= 1.0)) throw Error(ErrorCode::InvalidArgument, "lp_norm needs p >= 1");
    double s = 0.0;
    for (double v : f.values()) s += std::pow(std::abs(v), p);
    return std::pow(s * f.grid().delta(), 1.0 / p);
}

double h1_norm(const GridFunction& f) {
    const GridFunction d = forward_diff(f);
    return std::sqrt(inner_delta(f, f) + inner_delta(d, d));
}

double w2inf_dual_norm(const GridFunction& f, double tol_mean) {
    const GridFunction w = inv_laplacian(f, tol_mean);
    std::vector<double> sorted(w.vector());
    std::sort(sorted.begin(), sorted.end());
    const double c = sorted[(sorted.size() - 1) / 2];
    double s = 0.0;
    for (double v : w.values()) s += std::abs(v - c);
    return s * f.grid().delta();
}

double poincare_constant(const Grid& grid) noexcept {
    const double d = grid.delta();
    return d * d / (2.0 * (1.0 - std::cos(2.0 * std::numbers::pi * d)));
}

}  // namespace dlss
