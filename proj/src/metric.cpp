#include "dlsslab/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "dlsslab/error.hpp"
#include "dlsslab/mobility.hpp"

namespace dlss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GridFunction midpoint(const GridFunction& a, const GridFunction& b) {
    std::vector<double> v(a.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.5 * (a[k] + b[k]);
    return GridFunction(a.grid(), std::move(v));
}

}  // namespace

void MetricConfig::validate() const {
    if (S < 2) throw Error(ErrorCode::Config, "metric.S: must be >= 2");
    if (max_iterations < 0) throw Error(ErrorCode::Config, "metric.max_iterations: must be >= 0");
    if (!(rel_tol > 0.0)) throw Error(ErrorCode::Config, "metric.rel_tol: must be > 0");
    if (!(barrier_floor >= 0.0)) throw Error(ErrorCode::Config, "metric.barrier_floor: must be >= 0");
}

double Curve::continuity_residual() const {
    double m = 0.0;
    for (int s = 1; s <= slices(); ++s) {
        const GridFunction lw = laplacian(w[static_cast<std::size_t>(s - 1)]);
        const GridFunction& a = rho[static_cast<std::size_t>(s - 1)];
        const GridFunction& b = rho[static_cast<std::size_t>(s)];
        const double d = ds[static_cast<std::size_t>(s - 1)];
        for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs((b[k] - a[k]) / d - lw[k]));
    }
    return m;
}

GridFunction Curve::slice_mobility(int s) const {
    const GridFunction& b = rho[static_cast<std::size_t>(s)];
    if (rule == MobilityRule::RightEndpoint) return mobility_field(b);
    return mobility_field(midpoint(rho[static_cast<std::size_t>(s - 1)], b));
}

double relaxed_quotient(double p, double r) noexcept {
    if (r > 0.0) return p * p / r;
    if (r == 0.0 && p == 0.0) return 0.0;
    return kInf;
}

double action(const Curve& c) {
    double total = 0.0;
    const double d = c.grid.delta();
    for (int s = 1; s <= c.slices(); ++s) {
        const GridFunction m = c.slice_mobility(s);
        const GridFunction& w = c.w[static_cast<std::size_t>(s - 1)];
        double sum = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) sum += relaxed_quotient(w[k], m[k]);
        total += c.ds[static_cast<std::size_t>(s - 1)] * d * sum;
    }
    return total;
}

Curve reversed(const Curve& c) {
    if (c.rule != MobilityRule::Midpoint)
        throw Error(ErrorCode::InvalidArgument, "only midpoint curves are reversible");
    Curve r;
    r.grid = c.grid;
    r.rule = c.rule;
    r.rho.assign(c.rho.rbegin(), c.rho.rend());
    for (auto it = c.w.rbegin(); it != c.w.rend(); ++it) r.w.push_back(*it * -1.0);
    r.ds.assign(c.ds.rbegin(), c.ds.rend());
    return r;
}

Curve average(const Curve& a, const Curve& b) {
    if (!(a.grid == b.grid) || a.slices() != b.slices() || a.rule != b.rule)
        throw Error(ErrorCode::InvalidArgument, "curves are not compatible");
    Curve c = a;
    for (std::size_t i = 0; i < c.rho.size(); ++i) c.rho[i] = midpoint(a.rho[i], b.rho[i]);
    for (std::size_t i = 0; i < c.w.size(); ++i) c.w[i] = midpoint(a.w[i], b.w[i]);
    for (std::size_t i = 0; i < c.ds.size(); ++i)
        if (a.ds[i] != b.ds[i]) throw Error(ErrorCode::InvalidArgument, "curves have different slice widths");
    return c;
}

Curve connecting_curve(const Density& rho0, const Density& rho1, int S) {
    if (S < 1) throw Error(ErrorCode::InvalidArgument, "connecting_curve needs S >= 1");
    if (!(rho0.grid() == rho1.grid())) throw Error(ErrorCode::InvalidArgument, "endpoints on different grids");
    const Grid g = rho0.grid();
    Curve c;
    c.grid = g;
    c.ds.assign(static_cast<std::size_t>(S), 1.0 / S);
    for (int j = 0; j <= S; ++j) {
        if (j == 0) {
            c.rho.push_back(rho0.base());
            continue;
        }
        if (j == S) {
            c.rho.push_back(rho1.base());
            continue;
        }
        const double s = static_cast<double>(j) / S;
        const Density& e = s <= 0.5 ? rho0 : rho1;
        const double a = s <= 0.5 ? 4.0 * s * s : 4.0 * (1.0 - s) * (1.0 - s);
        std::vector<double> v(g.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = (1.0 - a) * e[k] + a;
        c.rho.push_back(GridFunction(g, std::move(v)));
    }
    for (int j = 1; j <= S; ++j) {
        const GridFunction q = (c.rho[static_cast<std::size_t>(j)] - c.rho[static_cast<std::size_t>(j - 1)]) * S;
        c.w.push_back(inv_laplacian(q, 1e-9));
    }
    return c;
}

double distance_lower(const Density& rho0, const Density& rho1) {
    return w2inf_dual_norm(rho0.base() - rho1.base(), 1e-10) / std::sqrt(3.0);
}

namespace {

// Unknowns: interior rho^1..rho^{S-1} followed by w^1..w^S, each block of length N.
struct Problem {
    int n = 0;
    int S = 0;
    double delta = 0.0;
    std::vector<double> ds;
    std::vector<double> rho0, rho1;

    int nr() const { return n * (S - 1); }
    int nw() const { return n * S; }
    int size() const { return nr() + nw(); }
    int rho_index(int s, int k) const { return (s - 1) * n + k; }  // s in 1..S-1
    int w_index(int s, int k) const { return nr() + (s - 1) * n + k; }  // s in 1..S
    int wrap(int k) const { return ((k % n) + n) % n; }

    double rho(const Eigen::VectorXd& z, int s, int k) const {
        if (s == 0) return rho0[static_cast<std::size_t>(k)];
        if (s == S) return rho1[static_cast<std::size_t>(k)];
        return z(rho_index(s, k));
    }
    double bar(const Eigen::VectorXd& z, int s, int k) const {
        const int kk = wrap(k);
        return 0.5 * (rho(z, s - 1, kk) + rho(z, s, kk));
    }

    bool admissible(const Eigen::VectorXd& z, double floor) const {
        for (int i = 0; i < nr(); ++i)
            if (!(z(i) > floor)) return false;
        for (int s = 1; s <= S; ++s)
            for (int k = 0; k < n; ++k)
                if (!(bar(z, s, k) > floor)) return false;
        return true;
    }

    double objective(const Eigen::VectorXd& z) const {
        double total = 0.0;
        for (int s = 1; s <= S; ++s) {
            double sum = 0.0;
            for (int k = 0; k < n; ++k) {
                const double m = mobility(bar(z, s, k), bar(z, s, k + 1), bar(z, s, k - 1));
                const double w = z(w_index(s, k));
                sum += relaxed_quotient(w, m);
            }
            total += ds[static_cast<std::size_t>(s - 1)] * delta * sum;
        }
        return total;
    }

    void derivatives(const Eigen::VectorXd& z, Eigen::VectorXd& g, Eigen::SparseMatrix<double>& h) const {
        g.setZero(size());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(S * n * 40));
        for (int s = 1; s <= S; ++s) {
            const double c = ds[static_cast<std::size_t>(s - 1)] * delta;
            for (int k = 0; k < n; ++k) {
                const int cells[3] = {wrap(k), wrap(k + 1), wrap(k - 1)};
                const MobilityDerivatives md =
                    mobility_derivatives(bar(z, s, cells[0]), bar(z, s, cells[1]), bar(z, s, cells[2]));
                const double m = md.value;
                const int wi = w_index(s, k);
                const double w = z(wi);
                g(wi) += c * 2.0 * w / m;
                trip.emplace_back(wi, wi, c * 2.0 / m);
                // rho-bar of cell j depends on rho^{s-1}_j and rho^s_j with weight 1/2.
                std::vector<std::pair<int, int>> deps;  // (variable, stencil slot)
                for (int a = 0; a < 3; ++a) {
                    if (s - 1 >= 1) deps.emplace_back(rho_index(s - 1, cells[a]), a);
                    if (s <= S - 1) deps.emplace_back(rho_index(s, cells[a]), a);
                }
                for (const auto& [vi, a] : deps) {
                    const double ga = md.grad[static_cast<std::size_t>(a)];
                    g(vi) += c * 0.5 * (-(w * w) / (m * m) * ga);
                    const double cross = c * 0.5 * (-2.0 * w / (m * m) * ga);
                    trip.emplace_back(wi, vi, cross);
                    trip.emplace_back(vi, wi, cross);
                    for (const auto& [vj, b] : deps) {
                        const double gb = md.grad[static_cast<std::size_t>(b)];
                        const double hab = md.hess[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
                        const double val = 2.0 * w * w / (m * m * m) * ga * gb - (w * w) / (m * m) * hab;
                        trip.emplace_back(vi, vj, c * 0.25 * val);
                    }
                }
            }
        }
        h.resize(size(), size());
        h.setFromTriplets(trip.begin(), trip.end());
    }

    // Log barrier keeping interior densities above 0 and slice midpoints above floor.
    int barrier_terms() const { return nr() + n * S; }

    double barrier(const Eigen::VectorXd& z, double floor) const {
        double b = 0.0;
        for (int i = 0; i < nr(); ++i) b -= std::log(z(i));
        for (int s = 1; s <= S; ++s)
            for (int k = 0; k < n; ++k) b -= std::log(bar(z, s, k) - floor);
        return b;
    }

    void add_barrier(const Eigen::VectorXd& z, double floor, double mu, Eigen::VectorXd& g,
                     Eigen::SparseMatrix<double>& h) const {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(nr() + 4 * n * S));
        for (int i = 0; i < nr(); ++i) {
            g(i) -= mu / z(i);
            trip.emplace_back(i, i, mu / (z(i) * z(i)));
        }
        for (int s = 1; s <= S; ++s)
            for (int k = 0; k < n; ++k) {
                const double u = bar(z, s, k) - floor;
                int vars[2];
                int nv = 0;
                if (s - 1 >= 1) vars[nv++] = rho_index(s - 1, k);
                if (s <= S - 1) vars[nv++] = rho_index(s, k);
                for (int a = 0; a < nv; ++a) {
                    g(vars[a]) -= mu * 0.5 / u;
                    for (int b = 0; b < nv; ++b) trip.emplace_back(vars[a], vars[b], mu * 0.25 / (u * u));
                }
            }
        Eigen::SparseMatrix<double> hb(size(), size());
        hb.setFromTriplets(trip.begin(), trip.end());
        h += hb;
    }

    // Largest alpha keeping z + alpha d strictly inside the barrier's domain.
    double max_step(const Eigen::VectorXd& z, const Eigen::VectorXd& d, double floor) const {
        double amax = kInf;
        for (int i = 0; i < nr(); ++i)
            if (d(i) < 0.0) amax = std::min(amax, -z(i) / d(i));
        for (int s = 1; s <= S; ++s)
            for (int k = 0; k < n; ++k) {
                double dd = 0.0;
                if (s - 1 >= 1) dd += 0.5 * d(rho_index(s - 1, k));
                if (s <= S - 1) dd += 0.5 * d(rho_index(s, k));
                if (dd < 0.0) amax = std::min(amax, (bar(z, s, k) - floor) / -dd);
            }
        return amax;
    }

    // Rows (s, k) of rho^s - rho^{s-1} - ds_s laplacian(w^s) = rhs; row (S, 0) dropped.
    Eigen::SparseMatrix<double> constraints() const {
        std::vector<Eigen::Triplet<double>> trip;
        const double l = 1.0 / (delta * delta);
        int row = 0;
        for (int s = 1; s <= S; ++s)
            for (int k = 0; k < n; ++k) {
                if (s == S && k == 0) continue;
                if (s <= S - 1) trip.emplace_back(row, rho_index(s, k), 1.0);
                if (s - 1 >= 1) trip.emplace_back(row, rho_index(s - 1, k), -1.0);
                const double d = ds[static_cast<std::size_t>(s - 1)];
                trip.emplace_back(row, w_index(s, wrap(k + 1)), -d * l);
                trip.emplace_back(row, w_index(s, wrap(k - 1)), -d * l);
                trip.emplace_back(row, w_index(s, k), 2.0 * d * l);
                ++row;
            }
        Eigen::SparseMatrix<double> a(row, size());
        a.setFromTriplets(trip.begin(), trip.end());
        return a;
    }
};

Eigen::VectorXd pack(const Problem& p, const Curve& c) {
    Eigen::VectorXd z(p.size());
    for (int s = 1; s < p.S; ++s)
        for (int k = 0; k < p.n; ++k) z(p.rho_index(s, k)) = c.rho[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)];
    for (int s = 1; s <= p.S; ++s)
        for (int k = 0; k < p.n; ++k) z(p.w_index(s, k)) = c.w[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(k)];
    return z;
}

Curve unpack(const Problem& p, const Curve& like, const Eigen::VectorXd& z) {
    Curve c = like;
    for (int s = 1; s < p.S; ++s) {
        std::vector<double> v(static_cast<std::size_t>(p.n));
        for (int k = 0; k < p.n; ++k) v[static_cast<std::size_t>(k)] = z(p.rho_index(s, k));
        c.rho[static_cast<std::size_t>(s)] = GridFunction(c.grid, std::move(v));
    }
    for (int s = 1; s <= p.S; ++s) {
        std::vector<double> v(static_cast<std::size_t>(p.n));
        for (int k = 0; k < p.n; ++k) v[static_cast<std::size_t>(k)] = z(p.w_index(s, k));
        c.w[static_cast<std::size_t>(s - 1)] = GridFunction(c.grid, std::move(v));
    }
    return c;
}

}  // namespace

GeodesicResult geodesic(const Density& rho0, const Density& rho1, const MetricConfig& cfg) {
    cfg.validate();
    if (!(rho0.grid() == rho1.grid())) throw Error(ErrorCode::InvalidArgument, "endpoints on different grids");
    const Grid grid = rho0.grid();
    GeodesicResult res;
    if (rho0.vector() == rho1.vector()) {
        Curve c;
        c.grid = grid;
        c.ds.assign(static_cast<std::size_t>(cfg.S), 1.0 / cfg.S);
        c.rho.assign(static_cast<std::size_t>(cfg.S + 1), rho0.base());
        c.w.assign(static_cast<std::size_t>(cfg.S), GridFunction::zeros(grid));
        res.curve = c;
        res.converged = true;
        return res;
    }
    const Curve seed = connecting_curve(rho0, rho1, cfg.S);
    Problem p;
    p.n = grid.n();
    p.S = cfg.S;
    p.delta = grid.delta();
    p.ds = seed.ds;
    p.rho0 = rho0.vector();
    p.rho1 = rho1.vector();
    if (!p.admissible(pack(p, seed), 0.0))
        throw Error(ErrorCode::Infeasible, "seed curve leaves the positive cone");

    const Eigen::SparseMatrix<double> a = p.constraints();
    const int nc = static_cast<int>(a.rows());
    const int nz = p.size();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nc);
    {
        int row = 0;
        for (int s = 1; s <= p.S; ++s)
            for (int k = 0; k < p.n; ++k) {
                if (s == p.S && k == 0) continue;
                if (s == 1) b(row) += p.rho0[static_cast<std::size_t>(k)];
                if (s == p.S) b(row) -= p.rho1[static_cast<std::size_t>(k)];
                ++row;
            }
    }

    // Path-following barrier method: each stage minimizes f + mu * barrier by
    // feasible Newton steps, then mu shrinks. The final gap is below mu * terms.
    Eigen::VectorXd z = pack(p, seed);
    const double floor = cfg.barrier_floor;
    double f = p.objective(z);
    res.initial_value = f;
    const double terms = p.barrier_terms();
    double mu = 1e-2 * f / terms;
    auto merit = [&](const Eigen::VectorXd& x, double m) {
        const double fx = p.objective(x);
        return std::isfinite(fx) ? fx + m * p.barrier(x, floor) : kInf;
    };
    double phi = merit(z, mu);
    if (!std::isfinite(phi)) throw Error(ErrorCode::Infeasible, "seed curve is too close to the barrier floor");

    Eigen::VectorXd g;
    Eigen::SparseMatrix<double> h;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool pattern_ready = false;
    int it = 0;

    while (it < cfg.max_iterations) {
        const bool last_stage = mu * terms <= 0.5 * cfg.rel_tol * f;
        const double stage_tol = last_stage ? 0.5 * cfg.rel_tol * f : mu * terms;
        p.derivatives(z, g, h);
        p.add_barrier(z, floor, mu, g, h);
        double scale = 0.0;
        for (int i = 0; i < nz; ++i) scale = std::max(scale, std::abs(h.coeff(i, i)));
        const double reg = 1e-14 * std::max(scale, 1.0);

        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(h.nonZeros() + 2 * a.nonZeros() + nz));
        for (int c = 0; c < h.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator e(h, c); e; ++e) trip.emplace_back(e.row(), e.col(), e.value());
        for (int i = 0; i < nz; ++i) trip.emplace_back(i, i, reg);
        for (int c = 0; c < a.outerSize(); ++c)
            for (Eigen::SparseMatrix<double>::InnerIterator e(a, c); e; ++e) {
                trip.emplace_back(nz + e.row(), e.col(), e.value());
                trip.emplace_back(e.col(), nz + e.row(), e.value());
            }
        Eigen::SparseMatrix<double> kkt(nz + nc, nz + nc);
        kkt.setFromTriplets(trip.begin(), trip.end());
        kkt.makeCompressed();
        if (!pattern_ready) {
            lu.analyzePattern(kkt);
            pattern_ready = true;
        }
        lu.factorize(kkt);
        if (lu.info() != Eigen::Success) {
            res.no_progress = true;
            break;
        }
        Eigen::VectorXd rhs(nz + nc);
        rhs.head(nz) = -g;
        rhs.tail(nc) = b - a * z;  // pulls rounding drift back onto the affine set
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd d = sol.head(nz);
        const double slope = g.dot(d);
        res.gradient_proxy = std::sqrt(std::max(0.0, -slope));

        bool stage_done = !(slope < 0.0) || 0.5 * -slope <= stage_tol;
        if (!stage_done) {
            double alpha = std::min(1.0, 0.99 * p.max_step(z, d, floor));
            bool accepted = false;
            Eigen::VectorXd trial;
            double pt = kInf;
            for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
                trial = z + alpha * d;
                if (!p.admissible(trial, floor)) continue;
                pt = merit(trial, mu);
                if (pt <= phi + 1e-4 * alpha * slope) {
                    accepted = true;
                    break;
                }
            }
            ++it;
            if (!accepted) {
                // Rounding floor of the merit function: treat the stage as finished.
                if (0.5 * -slope <= 1e3 * std::numeric_limits<double>::epsilon() * std::abs(phi)) {
                    stage_done = true;
                } else {
                    res.no_progress = true;
                    break;
                }
            } else {
                const double decrease = phi - pt;
                z = trial;
                phi = pt;
                f = p.objective(z);
                if (alpha == 1.0 && decrease <= stage_tol) stage_done = true;
            }
        }
        if (stage_done) {
            if (last_stage) {
                res.converged = true;
                break;
            }
            mu = std::max(mu * 0.1, 0.25 * cfg.rel_tol * f / terms);
            phi = merit(z, mu);
        }
    }
    res.iterations = it;
    res.curve = unpack(p, seed, z);
    res.value = action(res.curve);
    return res;
}

double distance_upper(const Density& rho0, const Density& rho1, const MetricConfig& cfg) {
    const double construction = action(connecting_curve(rho0, rho1, cfg.S));
    const GeodesicResult r = geodesic(rho0, rho1, cfg);
    return std::sqrt(std::min(construction, r.value));
}

DistanceReport distance_report(const Density& rho0, const Density& rho1, const MetricConfig& cfg) {
    DistanceReport rep;
    rep.lower = distance_lower(rho0, rho1);
    rep.upper_construction = std::sqrt(action(connecting_curve(rho0, rho1, cfg.S)));
    const GeodesicResult r = geodesic(rho0, rho1, cfg);
    rep.upper_optimized = std::sqrt(std::min(r.value, rep.upper_construction * rep.upper_construction));
    rep.iterations = r.iterations;
    MetricConfig fine = cfg;
    fine.S = 2 * cfg.S;
    const GeodesicResult r2 = geodesic(rho0, rho1, fine);
    rep.upper_optimized_2s = std::sqrt(r2.value);
    rep.iterations_2s = r2.iterations;
    rep.converged = r.converged && r2.converged;
    return rep;
}

namespace {

const StepRecord& record_of(const Trajectory& traj, std::size_t i) { return traj.records[traj.states[i].record]; }

std::size_t nearest_state(const Trajectory& traj, double t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < traj.states.size(); ++i)
        if (std::abs(record_of(traj, i).t - t) < std::abs(record_of(traj, best).t - t)) best = i;
    return best;
}

}  // namespace

Curve trajectory_curve(const Trajectory& traj, double t0, double t1) {
    if (traj.states.empty()) throw Error(ErrorCode::InvalidArgument, "trajectory has no stored states");
    if (t1 < t0) throw Error(ErrorCode::InvalidArgument, "trajectory_curve needs t0 <= t1");
    const std::size_t i0 = nearest_state(traj, t0);
    const std::size_t i1 = nearest_state(traj, t1);
    Curve c;
    c.grid = traj.grid;
    c.rule = MobilityRule::RightEndpoint;
    c.rho.push_back(traj.states[i0].rho.base());
    if (i1 <= i0) return c;
    const double span = record_of(traj, i1).t - record_of(traj, i0).t;
    for (std::size_t i = i0 + 1; i <= i1; ++i) {
        const StoredState& st = traj.states[i];
        const StepRecord& rec = record_of(traj, i);
        if (std::abs(rec.t - rec.dt - record_of(traj, i - 1).t) > 1e-12 * std::max(1.0, rec.t))
            throw Error(ErrorCode::InvalidArgument, "trajectory_curve needs every step stored (state_stride = 1)");
        c.rho.push_back(st.rho.base());
        c.w.push_back(flux(st.rho.base()) * span);
        c.ds.push_back(rec.dt / span);
    }
    return c;
}

TrajectoryBound trajectory_curve_bound(const Trajectory& traj, double t0, double t1) {
    const Curve c = trajectory_curve(traj, t0, t1);
    TrajectoryBound tb;
    const std::size_t i0 = nearest_state(traj, t0);
    const std::size_t i1 = std::max(i0, nearest_state(traj, t1));
    tb.t0 = record_of(traj, i0).t;
    tb.t1 = record_of(traj, i1).t;
    tb.action = action(c);
    tb.bound = (record_of(traj, i0).values.entropy - record_of(traj, i1).values.entropy) * (tb.t1 - tb.t0);
    tb.holds = tb.action <= tb.bound * (1.0 + 1e-6) + 1e-300;
    return tb;
}

HolderSample holder_sample(const Density& a, const Density& b, const MetricConfig& cfg) {
    HolderSample h;
    h.hellinger = hellinger(a, b);
    h.distance_upper = distance_upper(a, b, cfg);
    h.ratio = h.distance_upper > 0.0 ? h.hellinger / std::pow(h.distance_upper, 1.0 / 12.0) : 0.0;
    return h;
}

}  // namespace dlss
