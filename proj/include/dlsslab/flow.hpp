#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dlsslab/banded.hpp"
#include "dlsslab/density.hpp"
#include "dlsslab/functionals.hpp"

namespace dlss {

struct SolverConfig {
    double dt0_factor = 1.0 / 100.0;
    double newton_tol = 1e-11;
    int newton_max_iter = 25;
    int shrink_threshold = 4;
    int grow_threshold = 3;
    double grow_factor = 1.05;
    double shrink_factor = 0.5;
    double entropy_stop = 1e-14;
    double t_max = 1.0;
    double positivity_floor = 1e-300;
    int max_halvings = 40;
    /// Store every k-th accepted state (the initial and final states are always kept). 0 keeps only those two.
    int state_stride = 1;
    /// Hard cap on accepted steps; 0 means unlimited.
    long max_steps = 0;

    /// Throws Error(Config) naming the first violated invariant.
    void validate() const;
};

struct StepRecord {
    double t = 0.0;
    double dt = 0.0;
    int newton_iterations = 0;
    int damping_events = 0;
    int rejected_attempts = 0;
    double residual = 0.0;
    FunctionalValues values;
    double dissipation = 0.0;           // -dH/dt at the state
    double laplacian_sqrt_energy = 0.0;  // delta sum (laplacian sqrt rho)^2
    double log_laplacian_energy = 0.0;   // delta sum (laplacian log rho)^2
    double log_oscillation = 0.0;        // max log rho - min log rho
};

struct StoredState {
    std::size_t record = 0;  // index into Trajectory::records
    Density rho;
};

struct Trajectory {
    Grid grid{2};
    std::vector<StepRecord> records;  // records[0] is the initial state at t = 0
    std::vector<StoredState> states;
    bool stopped_on_entropy = false;

    const Density& initial() const { return states.front().rho; }
    const Density& final_state() const { return states.back().rho; }
    double t_final() const { return records.back().t; }
    std::size_t steps() const { return records.size() - 1; }
};

// Positive densities only. Kernels accept any positive grid function.
GridFunction flux(const GridFunction& rho);
GridFunction rhs(const GridFunction& rho);
GridFunction rhs_gradient_form(const GridFunction& rho);
GridFunction rhs_sqrt_form(const GridFunction& rho);
/// -2 backward_diff(sqrt(rho rho+) forward_diff(laplacian(sqrt rho) / sqrt rho)).
GridFunction rhs_wasserstein_form(const GridFunction& rho);
CyclicPentadiagonal jacobian(const GridFunction& rho);

inline GridFunction flux(const Density& r) { return flux(r.base()); }
inline GridFunction rhs(const Density& r) { return rhs(r.base()); }
inline CyclicPentadiagonal jacobian(const Density& r) { return jacobian(r.base()); }

StepRecord make_record(const GridFunction& rho, double t, double dt);

struct StepResult {
    Density rho;
    StepRecord record;
};

/// One implicit Euler step x - rho - dt rhs(x) = 0 by damped Newton.
/// Throws NewtonDivergence or PositivityLoss.
StepResult implicit_euler_step(const Density& rho, double dt, const SolverConfig& cfg);

/// Adaptive implicit Euler from rho0. Throws PositivityRequired for a
/// non-positive rho0 and StepFailure when dt underflows.
Trajectory simulate(const Density& rho0, const SolverConfig& cfg);

/// Both runs on a common accepted time grid.
std::pair<Trajectory, Trajectory> evolve_pair(const Density& rho0, const Density& eta0, const SolverConfig& cfg);

/// Fixed time step, no adaptation; stores every `stride`-th state.
Trajectory simulate_fixed(const Density& rho0, double dt, long steps, const SolverConfig& cfg, int stride = 1);

}  // namespace dlss
