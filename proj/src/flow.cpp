#include "dlsslab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dlsslab/error.hpp"
#include "dlsslab/mobility.hpp"
#include "stencil.hpp"

namespace dlss {

void SolverConfig::validate() const {
    auto bad = [](const std::string& key, const std::string& why) {
        throw Error(ErrorCode::Config, "solver." + key + ": " + why);
    };
    if (!(dt0_factor > 0.0)) bad("dt0_factor", "must be > 0");
    if (!(newton_tol > 0.0)) bad("newton_tol", "must be > 0");
    if (newton_max_iter < 1) bad("newton_max_iter", "must be >= 1");
    if (!(shrink_factor > 0.0 && shrink_factor < 1.0)) bad("shrink_factor", "must lie in (0, 1)");
    if (!(grow_factor > 1.0)) bad("grow_factor", "must be > 1");
    if (grow_threshold > shrink_threshold) bad("grow_threshold", "must not exceed shrink_threshold");
    if (shrink_threshold < 1) bad("shrink_threshold", "must be >= 1");
    if (!(entropy_stop >= 0.0)) bad("entropy_stop", "must be >= 0");
    if (!(t_max > 0.0)) bad("t_max", "must be > 0");
    if (!(positivity_floor >= 0.0)) bad("positivity_floor", "must be >= 0");
    if (max_halvings < 0) bad("max_halvings", "must be >= 0");
    if (state_stride < 0) bad("state_stride", "must be >= 0");
    if (max_steps < 0) bad("max_steps", "must be >= 0");
}

namespace {

void require_positive(const GridFunction& rho) {
    for (double v : rho.values())
        if (!(v > 0.0)) throw Error(ErrorCode::PositivityRequired, "flow needs a strictly positive density");
}

void flux_kernel(std::span<const double> r, double delta, std::span<double> w) {
    const std::size_t n = r.size();
    const double a = 2.0 / (delta * delta);
    for (std::size_t k = 0; k < n; ++k)
        w[k] = a * detail::sqrt_gap(r[k], r[(k + 1) % n], r[(k + n - 1) % n]);
}

GridFunction sqrt_of(const GridFunction& rho) {
    std::vector<double> q(rho.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = std::sqrt(rho[k]);
    return GridFunction(rho.grid(), std::move(q));
}

}  // namespace

GridFunction flux(const GridFunction& rho) {
    require_positive(rho);
    std::vector<double> w(rho.size());
    flux_kernel(rho.values(), rho.grid().delta(), w);
    return GridFunction(rho.grid(), std::move(w));
}

GridFunction rhs(const GridFunction& rho) { return laplacian(flux(rho)); }

GridFunction rhs_gradient_form(const GridFunction& rho) {
    require_positive(rho);
    const GridFunction m = mobility_field(rho);
    const GridFunction l = laplacian(entropy_gradient(rho));
    std::vector<double> p(rho.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = m[k] * l[k];
    return laplacian(GridFunction(rho.grid(), std::move(p))) * -1.0;
}

GridFunction rhs_sqrt_form(const GridFunction& rho) {
    require_positive(rho);
    const GridFunction q = sqrt_of(rho);
    const GridFunction lq = laplacian(q);
    const GridFunction llq = laplacian(lq);
    std::vector<double> r(rho.size());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = 2.0 * q[k] * (-llq[k] + lq[k] * lq[k] / q[k]);
    return GridFunction(rho.grid(), std::move(r));
}

GridFunction rhs_wasserstein_form(const GridFunction& rho) {
    require_positive(rho);
    const int n = rho.grid().n();
    const GridFunction q = sqrt_of(rho);
    const GridFunction lq = laplacian(q);
    std::vector<double> ratio(rho.size());
    for (std::size_t k = 0; k < ratio.size(); ++k) ratio[k] = lq[k] / q[k];
    const GridFunction dr = forward_diff(GridFunction(rho.grid(), std::move(ratio)));
    std::vector<double> f(rho.size());
    for (int k = 0; k < n; ++k)
        f[static_cast<std::size_t>(k)] = q.at(k) * q.at(k + 1) * dr.at(k);
    return backward_diff(GridFunction(rho.grid(), std::move(f))) * -2.0;
}

CyclicPentadiagonal jacobian(const GridFunction& rho) {
    require_positive(rho);
    const int n = rho.grid().n();
    const double d2 = rho.grid().delta() * rho.grid().delta();
    // Derivative of w: entry (l, l + e) = dw[e + 1][l].
    std::vector<double> q(rho.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = std::sqrt(rho[k]);
    auto qa = [&](int k) { return q[static_cast<std::size_t>(rho.grid().wrap(k))]; };
    std::vector<double> dm(rho.size()), d0(rho.size(), 2.0 / d2), dp(rho.size());
    for (int l = 0; l < n; ++l) {
        dp[static_cast<std::size_t>(l)] = -qa(l - 1) / qa(l + 1) / d2;
        dm[static_cast<std::size_t>(l)] = -qa(l + 1) / qa(l - 1) / d2;
    }
    auto at = [&](const std::vector<double>& v, int k) { return v[static_cast<std::size_t>(rho.grid().wrap(k))]; };
    CyclicPentadiagonal j(rho.size());
    for (int k = 0; k < n; ++k) {
        const std::size_t i = static_cast<std::size_t>(k);
        j.band(2, i) = at(dp, k + 1) / d2;
        j.band(1, i) = (at(d0, k + 1) - 2.0 * at(dp, k)) / d2;
        j.band(0, i) = (at(dm, k + 1) + at(dp, k - 1) - 2.0 * at(d0, k)) / d2;
        j.band(-1, i) = (at(d0, k - 1) - 2.0 * at(dm, k)) / d2;
        j.band(-2, i) = at(dm, k - 1) / d2;
    }
    return j;
}

StepRecord make_record(const GridFunction& rho, double t, double dt) {
    StepRecord r;
    r.t = t;
    r.dt = dt;
    r.values = evaluate_functionals(rho);
    r.dissipation = entropy_dissipation(rho);
    r.laplacian_sqrt_energy = laplacian_sqrt_energy(rho);
    r.log_laplacian_energy = log_laplacian_energy(rho);
    r.log_oscillation = log_oscillation(rho);
    return r;
}

namespace {

enum class NewtonStatus { Converged, MaxIterations, DampingExhausted, Positivity };

struct NewtonOutcome {
    NewtonStatus status = NewtonStatus::MaxIterations;
    std::vector<double> x;
    int iterations = 0;
    int damping = 0;
    double residual = 0.0;
};

struct Residual {
    std::vector<double> w, lw;
    // F = x - rho - dt laplacian(w(x)); returns max |F|.
    double eval(const std::vector<double>& x, const std::vector<double>& rho, double dt, double delta,
                std::vector<double>& f) {
        const std::size_t n = x.size();
        w.resize(n);
        lw.resize(n);
        f.resize(n);
        flux_kernel(x, delta, w);
        laplacian(w, delta, lw);
        double m = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            f[k] = (x[k] - rho[k]) - dt * lw[k];
            m = std::max(m, std::abs(f[k]));
        }
        return std::isfinite(m) ? m : INFINITY;
    }
};

NewtonOutcome newton(const Grid& grid, const std::vector<double>& rho, double dt, const SolverConfig& cfg,
                     int cap) {
    const std::size_t n = rho.size();
    const double delta = grid.delta();
    NewtonOutcome out;
    out.x = rho;
    Residual res;
    std::vector<double> f, ft, xt(n);
    double r = res.eval(out.x, rho, dt, delta, f);
    for (int it = 1; it <= cap; ++it) {
        CyclicPentadiagonal a = jacobian(GridFunction(grid, out.x));
        for (std::size_t i = 0; i < n; ++i)
            for (int d = -2; d <= 2; ++d) a.band(d, i) *= -dt;
        for (std::size_t i = 0; i < n; ++i) a.band(0, i) += 1.0;
        const CyclicPentadiagonalSolver solver(a);
        std::vector<double> minus_f(n);
        for (std::size_t i = 0; i < n; ++i) minus_f[i] = -f[i];
        const std::vector<double> step = solver.solve(minus_f);
        double lambda = 1.0;
        bool accepted = false;
        bool positivity_failed = false;
        double rt = 0.0;
        for (int h = 0; h <= cfg.max_halvings; ++h) {
            bool ok = true;
            for (std::size_t i = 0; i < n; ++i) {
                xt[i] = out.x[i] + lambda * step[i];
                if (!(xt[i] > cfg.positivity_floor)) ok = false;
            }
            if (!ok) {
                positivity_failed = true;
            } else {
                positivity_failed = false;
                rt = res.eval(xt, rho, dt, delta, ft);
                if (rt <= cfg.newton_tol || rt < r) {
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
            ++out.damping;
        }
        out.iterations = it;
        if (!accepted) {
            out.status = positivity_failed ? NewtonStatus::Positivity : NewtonStatus::DampingExhausted;
            out.residual = r;
            return out;
        }
        out.x.swap(xt);
        f.swap(ft);
        r = rt;
        if (r <= cfg.newton_tol) {
            out.status = NewtonStatus::Converged;
            out.residual = r;
            return out;
        }
    }
    out.status = NewtonStatus::MaxIterations;
    out.residual = r;
    return out;
}

// Internal states may drift from unit mass by rounding only.
constexpr double kStateMassTol = 1e-9;

Density to_density(const Grid& grid, std::vector<double> x) {
    return Density(GridFunction(grid, std::move(x)), kStateMassTol);
}

[[noreturn]] void throw_newton(const NewtonOutcome& o, double dt) {
    const std::string where = " at dt = " + std::to_string(dt);
    if (o.status == NewtonStatus::Positivity)
        throw Error(ErrorCode::PositivityLoss, "damping could not keep the Newton iterate positive" + where);
    if (o.status == NewtonStatus::DampingExhausted)
        throw Error(ErrorCode::NewtonDivergence, "Newton damping exhausted" + where);
    throw Error(ErrorCode::NewtonDivergence,
                "Newton did not converge in " + std::to_string(o.iterations) + " iterations" + where);
}

int newton_cap(const SolverConfig& cfg) { return std::min(cfg.newton_max_iter, cfg.shrink_threshold); }

bool store_this(const SolverConfig& cfg, std::size_t step) {
    return cfg.state_stride > 0 && step % static_cast<std::size_t>(cfg.state_stride) == 0;
}

void finish_states(Trajectory& tr, const Density& last) {
    if (tr.states.back().record != tr.records.size() - 1) tr.states.push_back({tr.records.size() - 1, last});
}

}  // namespace

StepResult implicit_euler_step(const Density& rho, double dt, const SolverConfig& cfg) {
    if (!is_positive(rho)) throw Error(ErrorCode::PositivityRequired, "implicit_euler_step needs a positive density");
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "implicit_euler_step needs dt > 0");
    const NewtonOutcome o = newton(rho.grid(), rho.vector(), dt, cfg, cfg.newton_max_iter);
    if (o.status != NewtonStatus::Converged) throw_newton(o, dt);
    const GridFunction x(rho.grid(), o.x);
    StepRecord rec = make_record(x, dt, dt);
    rec.newton_iterations = o.iterations;
    rec.damping_events = o.damping;
    rec.residual = o.residual;
    return {to_density(rho.grid(), o.x), rec};
}

Trajectory simulate(const Density& rho0, const SolverConfig& cfg) {
    cfg.validate();
    if (!is_positive(rho0)) throw Error(ErrorCode::PositivityRequired, "simulate needs a strictly positive initial density");
    const Grid grid = rho0.grid();
    Trajectory tr;
    tr.grid = grid;
    tr.records.push_back(make_record(rho0.base(), 0.0, 0.0));
    tr.states.push_back({0, rho0});
    if (tr.records.back().values.entropy <= cfg.entropy_stop) {
        tr.stopped_on_entropy = true;
        return tr;
    }
    const double dt_min = 1e-16 * grid.delta();
    double dt = cfg.dt0_factor * grid.delta();
    double t = 0.0;
    std::vector<double> x = rho0.vector();
    const int cap = newton_cap(cfg);
    while (t < cfg.t_max && (cfg.max_steps == 0 || static_cast<long>(tr.steps()) < cfg.max_steps)) {
        int rejected = 0;
        NewtonOutcome o;
        double h = 0.0;
        bool clipped = false;
        for (;;) {
            h = dt;
            clipped = false;
            if (t + h >= cfg.t_max) {
                h = cfg.t_max - t;
                clipped = true;
            }
            o = newton(grid, x, h, cfg, cap);
            if (o.status == NewtonStatus::Converged) break;
            dt *= cfg.shrink_factor;
            ++rejected;
            if (dt < dt_min)
                throw Error(ErrorCode::StepFailure, "time step underflow at t = " + std::to_string(t));
        }
        t = clipped ? cfg.t_max : t + h;
        x = o.x;
        const GridFunction gx(grid, x);
        StepRecord rec = make_record(gx, t, h);
        rec.newton_iterations = o.iterations;
        rec.damping_events = o.damping;
        rec.rejected_attempts = rejected;
        rec.residual = o.residual;
        tr.records.push_back(rec);
        const bool stop = rec.values.entropy <= cfg.entropy_stop;
        if (store_this(cfg, tr.steps()) || stop || t >= cfg.t_max)
            tr.states.push_back({tr.records.size() - 1, to_density(grid, x)});
        if (o.iterations < cfg.grow_threshold && !clipped) dt *= cfg.grow_factor;
        if (stop) {
            tr.stopped_on_entropy = true;
            break;
        }
    }
    finish_states(tr, to_density(grid, x));
    return tr;
}

std::pair<Trajectory, Trajectory> evolve_pair(const Density& rho0, const Density& eta0, const SolverConfig& cfg) {
    cfg.validate();
    if (!(rho0.grid() == eta0.grid())) throw Error(ErrorCode::InvalidArgument, "evolve_pair needs a common grid");
    if (!is_positive(rho0) || !is_positive(eta0))
        throw Error(ErrorCode::PositivityRequired, "evolve_pair needs strictly positive initial densities");
    const Grid grid = rho0.grid();
    std::array<Trajectory, 2> tr;
    std::array<std::vector<double>, 2> x{rho0.vector(), eta0.vector()};
    const std::array<const Density*, 2> init{&rho0, &eta0};
    for (int i = 0; i < 2; ++i) {
        tr[i].grid = grid;
        tr[i].records.push_back(make_record(init[i]->base(), 0.0, 0.0));
        tr[i].states.push_back({0, *init[i]});
    }
    auto done = [&] {
        return tr[0].records.back().values.entropy <= cfg.entropy_stop &&
               tr[1].records.back().values.entropy <= cfg.entropy_stop;
    };
    const double dt_min = 1e-16 * grid.delta();
    double dt = cfg.dt0_factor * grid.delta();
    double t = 0.0;
    const int cap = newton_cap(cfg);
    while (!done() && t < cfg.t_max && (cfg.max_steps == 0 || static_cast<long>(tr[0].steps()) < cfg.max_steps)) {
        int rejected = 0;
        std::array<NewtonOutcome, 2> o;
        double h = 0.0;
        bool clipped = false;
        for (;;) {
            h = dt;
            clipped = false;
            if (t + h >= cfg.t_max) {
                h = cfg.t_max - t;
                clipped = true;
            }
            o[0] = newton(grid, x[0], h, cfg, cap);
            if (o[0].status == NewtonStatus::Converged) o[1] = newton(grid, x[1], h, cfg, cap);
            if (o[0].status == NewtonStatus::Converged && o[1].status == NewtonStatus::Converged) break;
            dt *= cfg.shrink_factor;
            ++rejected;
            if (dt < dt_min)
                throw Error(ErrorCode::StepFailure, "time step underflow at t = " + std::to_string(t));
        }
        t = clipped ? cfg.t_max : t + h;
        const bool stop_now = [&] {
            bool s = true;
            for (int i = 0; i < 2; ++i) {
                x[i] = o[i].x;
                StepRecord rec = make_record(GridFunction(grid, x[i]), t, h);
                rec.newton_iterations = o[i].iterations;
                rec.damping_events = o[i].damping;
                rec.rejected_attempts = rejected;
                rec.residual = o[i].residual;
                tr[i].records.push_back(rec);
                s = s && rec.values.entropy <= cfg.entropy_stop;
            }
            return s;
        }();
        for (int i = 0; i < 2; ++i)
            if (store_this(cfg, tr[i].steps()) || stop_now || t >= cfg.t_max)
                tr[i].states.push_back({tr[i].records.size() - 1, to_density(grid, x[i])});
        if (std::max(o[0].iterations, o[1].iterations) < cfg.grow_threshold && !clipped) dt *= cfg.grow_factor;
    }
    tr[0].stopped_on_entropy = tr[1].stopped_on_entropy = done();
    for (int i = 0; i < 2; ++i) finish_states(tr[i], to_density(grid, x[i]));
    return {std::move(tr[0]), std::move(tr[1])};
}

namespace {

// Advance x by dt, splitting the interval when Newton fails.
void fixed_advance(const Grid& grid, std::vector<double>& x, double dt, const SolverConfig& cfg, int depth,
                   NewtonOutcome& worst) {
    NewtonOutcome o = newton(grid, x, dt, cfg, cfg.newton_max_iter);
    if (o.status == NewtonStatus::Converged) {
        x = std::move(o.x);
        worst.iterations = std::max(worst.iterations, o.iterations);
        worst.damping += o.damping;
        worst.residual = std::max(worst.residual, o.residual);
        return;
    }
    if (depth >= 30) throw_newton(o, dt);
    fixed_advance(grid, x, 0.5 * dt, cfg, depth + 1, worst);
    fixed_advance(grid, x, 0.5 * dt, cfg, depth + 1, worst);
}

}  // namespace

Trajectory simulate_fixed(const Density& rho0, double dt, long steps, const SolverConfig& cfg, int stride) {
    cfg.validate();
    if (!is_positive(rho0)) throw Error(ErrorCode::PositivityRequired, "simulate needs a strictly positive initial density");
    if (!(dt > 0.0) || steps < 0) throw Error(ErrorCode::InvalidArgument, "simulate_fixed needs dt > 0 and steps >= 0");
    const Grid grid = rho0.grid();
    Trajectory tr;
    tr.grid = grid;
    tr.records.push_back(make_record(rho0.base(), 0.0, 0.0));
    tr.states.push_back({0, rho0});
    std::vector<double> x = rho0.vector();
    for (long s = 1; s <= steps; ++s) {
        NewtonOutcome worst;
        fixed_advance(grid, x, dt, cfg, 0, worst);
        StepRecord rec = make_record(GridFunction(grid, x), static_cast<double>(s) * dt, dt);
        rec.newton_iterations = worst.iterations;
        rec.damping_events = worst.damping;
        rec.residual = worst.residual;
        tr.records.push_back(rec);
        if (stride > 0 && s % stride == 0) tr.states.push_back({tr.records.size() - 1, to_density(grid, x)});
    }
    finish_states(tr, to_density(grid, x));
    return tr;
}

}  // namespace dlss
