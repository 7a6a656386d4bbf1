#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dlsslab/flow.hpp"
#include "dlsslab/grid.hpp"

namespace dlss {

/// Margins are normalized: (rhs - lhs) / max(1, |rhs|, |lhs|).
struct InequalityReport {
    std::string name;
    long samples = 0;
    double worst_margin = 0.0;
    std::string worst_case;           // human-readable location of the worst sample
    std::vector<double> worst_input;  // enough to reproduce it
    double tolerance = 1e-12;
    bool pass = true;
    std::vector<std::pair<std::string, double>> components;  // per-bound worst margins, if any
};

double normalized_margin(double lhs, double rhs) noexcept;

inline constexpr double kLsiConstant = 25.0 / (8.0 * 3.14159265358979323846 * 3.14159265358979323846);

/// Sample i of a suite: 3-point moving average of uniforms on [-1, 1], with an
/// adversarial spike in every fourth sample. Deterministic in (seed, i).
std::vector<double> test_function(const Grid& grid, std::uint64_t seed, std::uint64_t i);
/// exp(3 * test_function), normalized to unit mass.
Density test_density(const Grid& grid, std::uint64_t seed, std::uint64_t i);

/// Relative gap of the Poincare inequality at the lowest Fourier mode.
double poincare_saturation(const Grid& grid);

InequalityReport poincare_suite(const Grid& grid, long samples, std::uint64_t seed);
/// Both the f^2 log f^2 form and H <= C_LSI F.
InequalityReport lsi_suite(const Grid& grid, long samples, std::uint64_t seed);
InequalityReport gns_suite(const Grid& grid, double p, long samples, std::uint64_t seed);
InequalityReport interpolation_suite(const Grid& grid, long samples, std::uint64_t seed);
/// Entropy dissipation >= delta sum (laplacian sqrt rho)^2.
InequalityReport entropy_production_suite(const Grid& grid, long samples, std::uint64_t seed);

/// (uv-1) log(uv) + ((u-1)^3/(u+1) + (v-1)^3/(v+1)) / 2 - (u+v-2)^2 / 4.
double monster_margin(double u, double v) noexcept;
/// (u - 1/v)^2 + (v - 1/u)^2 - 2 (log uv)^2.
double elementary_log_margin(double u, double v) noexcept;
/// Scans (0, umax]^2 on the lattice step, 2 step, ...
InequalityReport monster_scan(double umax, double step);
InequalityReport elementary_log_scan(double umax, double step);

/// C_r = r / (4 C_PI (r+1)^{r+1}).
double short_time_constant(const Grid& grid, double r) noexcept;

/// Uniform-in-time decay bounds along a recorded trajectory, tolerance 1e-9.
/// Tail dissipation is integrated only over the recorded horizon.
InequalityReport decay_suite(const Trajectory& traj);

}  // namespace dlss
