#include "dlsslab/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dlsslab/error.hpp"
#include "dlsslab/functionals.hpp"
#include "dlsslab/parallel.hpp"

namespace dlss {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Cell boundaries (k + 1/2) / n reduced to [0, 1).
void push_boundaries(int n, std::vector<double>& out) {
    for (int k = 0; k < n; ++k) out.push_back((k + 0.5) / n);
}

GridFunction sqrt_of(const GridFunction& f) {
    std::vector<double> v(f.vector());
    for (double& x : v) x = std::sqrt(x);
    return GridFunction(f.grid(), std::move(v));
}

double order_of(double coarse, double fine, double ratio) {
    if (!std::isfinite(coarse) || !std::isfinite(fine)) return kNaN;
    if (coarse == 0.0 && fine == 0.0) return 0.0;
    return std::log(coarse / fine) / std::log(ratio);
}

double sinc(double z) { return z == 0.0 ? 1.0 : std::sin(z) / z; }

}  // namespace

double common_refinement_l2(const GridFunction& a, const GridFunction& b) {
    std::vector<double> cuts;
    push_boundaries(a.grid().n(), cuts);
    push_boundaries(b.grid().n(), cuts);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double s = 0.0;
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = i + 1 < cuts.size() ? cuts[i + 1] : cuts.front() + 1.0;
        const double mid = 0.5 * (lo + hi);
        const double d = reconstruct(a, mid) - reconstruct(b, mid);
        s += (hi - lo) * d * d;
    }
    return std::sqrt(s);
}

GridFunction cell_average_onto(const GridFunction& f, const Grid& target) {
    std::vector<double> cuts;
    push_boundaries(f.grid().n(), cuts);
    push_boundaries(target.n(), cuts);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> acc(target.size(), 0.0);
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        const double lo = cuts[i];
        const double hi = i + 1 < cuts.size() ? cuts[i + 1] : cuts.front() + 1.0;
        const double mid = 0.5 * (lo + hi);
        acc[static_cast<std::size_t>(target.cell_of(mid))] += (hi - lo) * reconstruct(f, mid);
    }
    for (double& x : acc) x /= target.delta();
    return GridFunction(target, std::move(acc));
}

SpaceTimeTest bump_test(int k, double ta, double tb) {
    if (!(tb > ta)) throw Error(ErrorCode::InvalidArgument, "bump_test needs ta < tb");
    const double c = 0.5 * (ta + tb);
    const double h = 0.5 * (tb - ta);
    SpaceTimeTest t;
    t.k = k;
    t.psi = [c, h](double time) {
        const double s = (time - c) / h;
        return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0;
    };
    t.dpsi = [c, h](double time) {
        const double s = (time - c) / h;
        if (!(std::abs(s) < 1.0)) return 0.0;
        const double q = 1.0 - s * s;
        return std::exp(-1.0 / q) * (-2.0 * s / (q * q)) / h;
    };
    return t;
}

double weak_residual(const Trajectory& traj, const SpaceTimeTest& phi) {
    const Grid& g = traj.grid;
    const int n = g.n();
    const double d = g.delta();
    const double w = 2.0 * std::numbers::pi * phi.k;
    std::vector<double> c(g.size());
    const double avg = sinc(0.5 * w * d);  // cell average of cos(w x) is cos(w x_k) sinc(w delta / 2)
    for (int k = 0; k < n; ++k) c[static_cast<std::size_t>(k)] = std::cos(w * g.center(k)) * avg;

    auto integrand = [&](const StoredState& st) {
        const double t = traj.records[st.record].t;
        const double p = phi.psi(t);
        const double dp = phi.dpsi(t);
        if (p == 0.0 && dp == 0.0) return 0.0;
        const GridFunction r = sqrt_of(st.rho.base());
        const GridFunction fp = forward_diff(r);
        const GridFunction bm = backward_diff(r);
        const GridFunction lr = laplacian(r);
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            const std::size_t i = static_cast<std::size_t>(k);
            const double f = (2.0 * r[i] + d * fp[i] + d * bm[i]) * lr[i] - fp[i] * fp[i] - bm[i] * bm[i];
            s += dp * c[i] * st.rho[i] + p * w * w * c[i] * f;
        }
        return d * s;
    };
    double total = 0.0;
    double prev = traj.states.empty() ? 0.0 : integrand(traj.states.front());
    for (std::size_t i = 1; i < traj.states.size(); ++i) {
        const double cur = integrand(traj.states[i]);
        const double dt = traj.records[traj.states[i].record].t - traj.records[traj.states[i - 1].record].t;
        total += 0.5 * dt * (prev + cur);
        prev = cur;
    }
    return total;
}

void StudyConfig::validate() const {
    if (ladder.size() < 2) throw Error(ErrorCode::Config, "convergence.ladder: needs at least two levels");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (ladder[i] < 2) throw Error(ErrorCode::Config, "convergence.ladder: grid sizes must be >= 2");
        if (i > 0 && (ladder[i] <= ladder[i - 1] || ladder[i] % ladder[0] != 0))
            throw Error(ErrorCode::Config, "convergence.ladder: sizes must increase and be multiples of the first");
    }
    if (!(dt_factor > 0.0)) throw Error(ErrorCode::Config, "convergence.dt_factor: must be > 0");
    if (k < 0) throw Error(ErrorCode::Config, "convergence.k: must be >= 0");
    if (!(window_scale > 0.2)) throw Error(ErrorCode::Config, "convergence.window_scale: must be > 0.2");
    if (points < 2) throw Error(ErrorCode::Config, "convergence.points: must be >= 2");
    if (!(decay_factor > 1.0)) throw Error(ErrorCode::Config, "convergence.decay_factor: must be > 1");
    solver.validate();
}

RefinementStudy run_study(const ContinuousDatum& datum, const StudyConfig& cfg) {
    cfg.validate();
    RefinementStudy study;
    study.datum = datum.name;
    study.config = cfg;
    const int n0 = cfg.ladder.front();
    const double dt0 = cfg.dt_factor / (static_cast<double>(n0) * n0);

    // Coarse run to locate T on the coarse time lattice.
    const Density rho0 = project_initial(datum, Grid(n0));
    const double h0 = entropy(rho0);
    long n_t = cfg.points - 1;
    if (h0 > cfg.solver.entropy_stop) {
        long horizon = 256;
        for (;;) {
            const Trajectory tr = simulate_fixed(rho0, dt0, horizon, cfg.solver, 0);
            long hit = -1;
            for (std::size_t i = 0; i < tr.records.size(); ++i)
                if (tr.records[i].values.entropy <= h0 / cfg.decay_factor) {
                    hit = static_cast<long>(i);
                    break;
                }
            if (hit >= 0) {
                n_t = std::max<long>(hit, cfg.points - 1);
                break;
            }
            if (horizon > (1L << 26)) throw Error(ErrorCode::StepFailure, "entropy does not decay on the coarse level");
            horizon *= 2;
        }
    }
    const long a = static_cast<long>(std::ceil(0.2 * static_cast<double>(n_t)));
    const long b = std::max(a + 1, std::lround(cfg.window_scale * static_cast<double>(n_t)));
    std::vector<long> sample_steps;
    for (int i = 0; i < cfg.points; ++i) {
        const long s = a + std::lround(static_cast<double>(i) * static_cast<double>(b - a) / (cfg.points - 1));
        if (sample_steps.empty() || s != sample_steps.back()) sample_steps.push_back(s);
    }
    study.T = static_cast<double>(n_t) * dt0;
    study.t_a = static_cast<double>(a) * dt0;
    study.t_b = static_cast<double>(b) * dt0;
    for (long s : sample_steps) study.times.push_back(static_cast<double>(s) * dt0);

    const std::size_t levels = cfg.ladder.size();
    std::vector<Trajectory> runs(levels);
    std::vector<long> ratio(levels);
    study.levels.resize(levels);
    const SpaceTimeTest phi = bump_test(cfg.k, study.t_a, study.t_b);
    parallel_for(levels, [&](std::size_t i) {
        const int n = cfg.ladder[i];
        const long r = static_cast<long>(n / n0) * static_cast<long>(n / n0);
        ratio[i] = r;
        const double dt = dt0 / static_cast<double>(r);
        runs[i] = simulate_fixed(project_initial(datum, Grid(n)), dt, b * r, cfg.solver, 1);
        LevelResult& lv = study.levels[i];
        lv.n = n;
        lv.dt = dt;
        lv.steps = b * r;
        lv.weak_residual = weak_residual(runs[i], phi);
    });

    for (std::size_t i = 0; i < levels; ++i) {
        LevelResult& lv = study.levels[i];
        if (i + 1 == levels) {
            lv.e_l2_rho = lv.e_l2_sqrt = lv.order_estimate = lv.order_sqrt = kNaN;
            lv.e_projected = lv.order_projected = kNaN;
            continue;
        }
        double er = 0.0, es = 0.0, ep = 0.0;
        const Grid coarse(cfg.ladder[i]);
        for (long s : sample_steps) {
            const GridFunction& x = runs[i].states[static_cast<std::size_t>(s * ratio[i])].rho.base();
            const GridFunction& y = runs[i + 1].states[static_cast<std::size_t>(s * ratio[i + 1])].rho.base();
            er += common_refinement_l2(x, y);
            es += common_refinement_l2(sqrt_of(x), sqrt_of(y));
            const GridFunction diff = x - cell_average_onto(y, coarse);
            ep += std::sqrt(inner_delta(diff, diff));
        }
        const double m = static_cast<double>(sample_steps.size());
        lv.e_l2_rho = er / m;
        lv.e_l2_sqrt = es / m;
        lv.e_projected = ep / m;
    }
    for (std::size_t i = 0; i + 2 <= levels; ++i) {
        LevelResult& lv = study.levels[i];
        if (i + 2 < levels) {
            const double q = static_cast<double>(cfg.ladder[i + 1]) / cfg.ladder[i];
            lv.order_estimate = order_of(lv.e_l2_rho, study.levels[i + 1].e_l2_rho, q);
            lv.order_sqrt = order_of(lv.e_l2_sqrt, study.levels[i + 1].e_l2_sqrt, q);
            lv.order_projected = order_of(lv.e_projected, study.levels[i + 1].e_projected, q);
        } else {
            lv.order_estimate = lv.order_sqrt = lv.order_projected = kNaN;
        }
    }
    // Global orders from the last two available errors.
    if (levels >= 3) {
        const LevelResult& p = study.levels[levels - 3];
        study.order_estimate = p.order_estimate;
        study.order_sqrt = p.order_sqrt;
        study.order_projected = p.order_projected;
    } else {
        study.order_estimate = study.order_sqrt = study.order_projected = kNaN;
    }
    for (std::size_t i = 0; i + 2 < levels; ++i) {
        const LevelResult& x = study.levels[i];
        const LevelResult& y = study.levels[i + 1];
        const bool trivial = x.e_l2_rho == 0.0 && y.e_l2_rho == 0.0;
        if (!trivial && !(y.e_l2_rho < x.e_l2_rho)) study.errors_decreasing = false;
        if (!trivial && !(y.e_l2_sqrt < x.e_l2_sqrt)) study.sqrt_errors_decreasing = false;
    }
    for (std::size_t i = 0; i + 1 < levels; ++i) {
        const double x = std::abs(study.levels[i].weak_residual);
        const double y = std::abs(study.levels[i + 1].weak_residual);
        if (!(x == 0.0 && y == 0.0) && !(y < x)) study.residual_decreasing = false;
    }
    return study;
}

}  // namespace dlss
