#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dlsslab/density.hpp"
#include "dlsslab/flow.hpp"

namespace dlss {

/// Exact L2(S1) distance between the piecewise-constant reconstructions of two
/// grid functions, summed over the merged cell boundaries of both meshes.
double common_refinement_l2(const GridFunction& a, const GridFunction& b);
inline double common_refinement_l2(const Density& a, const Density& b) { return common_refinement_l2(a.base(), b.base()); }

/// Exact cell averages of the reconstruction of f over the cells of target.
GridFunction cell_average_onto(const GridFunction& f, const Grid& target);

/// phi(t, x) = psi(t) cos(2 pi k x).
struct SpaceTimeTest {
    std::function<double(double)> psi;
    std::function<double(double)> dpsi;
    int k = 1;
};

/// Smooth bump exp(-1 / (1 - s^2)) rescaled to [ta, tb].
SpaceTimeTest bump_test(int k, double ta, double tb);

/// int int (d_t phi) rho - (d_xx phi) f with f = 2 (sqrt(rho+ rho-) - rho) / delta^2 in
/// its difference-operator form; phi derivatives are cell-averaged exactly, time is
/// integrated by the trapezoid rule over the stored states.
double weak_residual(const Trajectory& traj, const SpaceTimeTest& phi);

struct StudyConfig {
    std::vector<int> ladder{32, 64, 128};
    double dt_factor = 0.01;    // dt = dt_factor * delta^2
    int k = 1;                  // test-function wave number
    double window_scale = 1.0;  // window is [0.2 T, window_scale * T]
    int points = 16;            // comparison times in the window
    double decay_factor = 10.0; // T: coarse entropy has dropped by this factor
    SolverConfig solver;

    void validate() const;
};

struct LevelResult {
    int n = 0;
    double dt = 0.0;
    long steps = 0;
    // Differences to the next level up the ladder; NaN on the finest level.
    double e_l2_rho = 0.0;
    double e_l2_sqrt = 0.0;
    double order_estimate = 0.0;
    double order_sqrt = 0.0;
    // Discrete L2 on this grid against the next level's exact cell averages.
    double e_projected = 0.0;
    double order_projected = 0.0;
    double weak_residual = 0.0;
};

struct RefinementStudy {
    std::string datum;
    StudyConfig config;
    double T = 0.0;
    double t_a = 0.0;
    double t_b = 0.0;
    std::vector<double> times;
    std::vector<LevelResult> levels;
    double order_estimate = 0.0;   // from the last pair of errors
    double order_sqrt = 0.0;
    double order_projected = 0.0;
    bool errors_decreasing = true;
    bool sqrt_errors_decreasing = true;
    bool residual_decreasing = true;
};

/// Runs every ladder level with fixed dt on a common time lattice and compares
/// neighbouring levels at the sampled times.
RefinementStudy run_study(const ContinuousDatum& datum, const StudyConfig& cfg);

}  // namespace dlss
