#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dlss {

/// Equidistant cyclic mesh of N cells of width delta = 1/N on the unit circle.
///
/// Cell k (0 <= k < N) is centred at x = k*delta and covers
/// ((k - 1/2) delta, (k + 1/2) delta); indices are taken modulo N.
class Grid {
public:
    explicit Grid(int n);

    int n() const noexcept { return n_; }
    double delta() const noexcept { return delta_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_); }

    int wrap(int k) const noexcept {
        const int r = k % n_;
        return r < 0 ? r + n_ : r;
    }
    double center(int k) const noexcept { return k * delta_; }
    double cell_left(int k) const noexcept { return (k - 0.5) * delta_; }
    double cell_right(int k) const noexcept { return (k + 0.5) * delta_; }

    /// Cell containing x in [0,1); boundaries belong to the cell on the right.
    int cell_of(double x) const noexcept;

    friend bool operator==(const Grid& a, const Grid& b) noexcept { return a.n_ == b.n_; }

private:
    int n_;
    double delta_;
};

/// Real-valued function on a Grid. Immutable after construction.
class GridFunction {
public:
    GridFunction(Grid grid, std::vector<double> values);
    static GridFunction constant(Grid grid, double c);
    static GridFunction zeros(Grid grid) { return constant(grid, 0.0); }

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t k) const noexcept { return values_[k]; }
    /// Cyclic access.
    double at(int k) const noexcept { return values_[static_cast<std::size_t>(grid_.wrap(k))]; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }

    GridFunction operator+(const GridFunction& o) const;
    GridFunction operator-(const GridFunction& o) const;
    GridFunction operator*(double s) const;
    friend GridFunction operator*(double s, const GridFunction& f) { return f * s; }

    /// delta * sum of values.
    double integral() const noexcept;
    double max_abs() const noexcept;

private:
    Grid grid_;
    std::vector<double> values_;
};

// Default absolute tolerance on |delta * sum f| for zero-average inputs.
inline constexpr double kMeanTolerance = 1e-12;

// Raw-span kernels used by the solvers. out must not alias in.
void forward_diff(std::span<const double> f, double delta, std::span<double> out);
void backward_diff(std::span<const double> f, double delta, std::span<double> out);
void laplacian(std::span<const double> f, double delta, std::span<double> out);
/// Zero-average solution W of laplacian(W) = f. f must have zero sum (unchecked).
void inv_laplacian(std::span<const double> f, double delta, std::span<double> out);

GridFunction forward_diff(const GridFunction& f);
GridFunction backward_diff(const GridFunction& f);
GridFunction laplacian(const GridFunction& f);
/// Throws Error(NonZeroMean) unless |delta * sum f| <= tol_mean.
GridFunction inv_laplacian(const GridFunction& f, double tol_mean = kMeanTolerance);

double inner_delta(const GridFunction& f, const GridFunction& g);
double lp_norm(const GridFunction& f, double p);
double h1_norm(const GridFunction& f);

/// Dual norm of f against {phi : max |laplacian(phi)| <= 1}; f must have
/// zero average. Evaluated as min_c delta*sum|W - c| with W = inv_laplacian(f)
/// and c the lower median of W.
double w2inf_dual_norm(const GridFunction& f, double tol_mean = kMeanTolerance);

/// Sharp discrete Poincare constant delta^2 / (2 (1 - cos(2 pi delta))).
double poincare_constant(const Grid& grid) noexcept;

}  // namespace dlss
