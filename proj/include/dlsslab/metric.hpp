#pragma once

#include <vector>

#include "dlsslab/density.hpp"
#include "dlsslab/flow.hpp"

namespace dlss {

enum class MobilityRule {
    Midpoint,       // M at (rho^{s-1} + rho^s) / 2
    RightEndpoint,  // M at rho^s
};

/// Time-discrete curve rho^0..rho^S with fluxes w^1..w^S and slice widths ds.
struct Curve {
    Grid grid{2};
    std::vector<GridFunction> rho;
    std::vector<GridFunction> w;
    std::vector<double> ds;
    MobilityRule rule = MobilityRule::Midpoint;

    int slices() const noexcept { return static_cast<int>(w.size()); }
    /// max_{s,k} |(rho^s - rho^{s-1}) / ds_s - laplacian(w^s)|.
    double continuity_residual() const;
    /// Mobility field used on slice s (1-based).
    GridFunction slice_mobility(int s) const;
};

struct MetricConfig {
    int S = 32;
    int max_iterations = 5000;
    double rel_tol = 1e-8;
    double barrier_floor = 1e-12;

    void validate() const;
};

/// [p^2 / r]: 0 for r = p = 0, +inf for r = 0 < |p| or r < 0.
double relaxed_quotient(double p, double r) noexcept;

/// sum_s ds_s delta sum_k [ (w^s_k)^2 / M_k ].
double action(const Curve& c);

Curve reversed(const Curve& c);

/// Average of two curves on the same grid and slices.
Curve average(const Curve& a, const Curve& b);

/// Explicit connection through the uniform density; slice fluxes solve the
/// discrete continuity equation exactly.
Curve connecting_curve(const Density& rho0, const Density& rho1, int S);

/// Dual-norm lower bound on the distance.
double distance_lower(const Density& rho0, const Density& rho1);

struct GeodesicResult {
    Curve curve;
    double value = 0.0;        // action of curve, an upper bound on the squared distance
    double initial_value = 0.0;
    int iterations = 0;
    bool converged = false;
    bool no_progress = false;  // line search stalled; curve is the best feasible iterate
    double gradient_proxy = 0.0;  // Newton decrement at the returned iterate
};

/// Feasible Newton method on (rho, w) in the affine set of the continuity and endpoint constraints,
/// with a log barrier on the densities and midpoints that is driven to zero in stages.
GeodesicResult geodesic(const Density& rho0, const Density& rho1, const MetricConfig& cfg);

/// Square root of min(action of the construction, optimized value).
double distance_upper(const Density& rho0, const Density& rho1, const MetricConfig& cfg);

struct DistanceReport {
    double lower = 0.0;
    double upper_construction = 0.0;
    double upper_optimized = 0.0;
    double upper_optimized_2s = 0.0;
    int iterations = 0;
    int iterations_2s = 0;
    bool converged = false;
};

/// Bounds on the distance (not squared) at S and 2S slices.
DistanceReport distance_report(const Density& rho0, const Density& rho1, const MetricConfig& cfg);

/// Curve through the recorded states between the records nearest to t0 and t1,
/// with w = (t1 - t0) flux(rho_{n+1}) and right-endpoint mobility.
Curve trajectory_curve(const Trajectory& traj, double t0, double t1);

struct TrajectoryBound {
    double t0 = 0.0;
    double t1 = 0.0;
    double action = 0.0;
    double bound = 0.0;  // (H(t0) - H(t1)) (t1 - t0)
    bool holds = true;   // action <= bound (1 + 1e-6)
};
TrajectoryBound trajectory_curve_bound(const Trajectory& traj, double t0, double t1);

struct HolderSample {
    double hellinger = 0.0;
    double distance_upper = 0.0;
    double ratio = 0.0;  // hellinger / distance_upper^{1/12}
};
HolderSample holder_sample(const Density& a, const Density& b, const MetricConfig& cfg);

}  // namespace dlss
