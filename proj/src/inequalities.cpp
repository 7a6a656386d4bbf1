#include "dlsslab/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "dlsslab/error.hpp"
#include "dlsslab/functionals.hpp"
#include "dlsslab/parallel.hpp"

namespace dlss {

namespace {

constexpr double kSampleTolerance = 1e-12;
constexpr double kTrajectoryTolerance = 1e-9;

struct Sample {
    double margin = 0.0;
    std::string where;
    std::vector<double> input;
};

// Margins are computed in parallel; the worst one is chosen by index order and
// then recomputed with its description so the result does not depend on threads.
InequalityReport run_samples(const std::string& name, long samples,
                             const std::function<Sample(std::uint64_t)>& eval) {
    if (samples < 0) throw Error(ErrorCode::InvalidArgument, name + ": negative sample count");
    std::vector<double> margins(static_cast<std::size_t>(samples));
    parallel_for(margins.size(), [&](std::size_t i) { margins[i] = eval(i).margin; });
    InequalityReport rep;
    rep.name = name;
    rep.samples = samples;
    rep.tolerance = kSampleTolerance;
    if (samples == 0) return rep;
    std::size_t worst = 0;
    for (std::size_t i = 1; i < margins.size(); ++i)
        if (margins[i] < margins[worst]) worst = i;
    Sample s = eval(worst);
    rep.worst_margin = s.margin;
    rep.worst_case = "sample " + std::to_string(worst) + (s.where.empty() ? "" : ", " + s.where);
    rep.worst_input = std::move(s.input);
    rep.pass = rep.worst_margin >= -rep.tolerance;
    return rep;
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    return std::mt19937_64(seq);
}

GridFunction mean_free(const GridFunction& f) {
    const double m = f.integral();
    std::vector<double> v(f.vector());
    for (double& x : v) x -= m;
    return GridFunction(f.grid(), std::move(v));
}

std::string fmt(const char* key, double v) {
    std::ostringstream os;
    os.precision(17);
    os << key << "=" << v;
    return os.str();
}

}  // namespace

double normalized_margin(double lhs, double rhs) noexcept {
    return (rhs - lhs) / std::max({1.0, std::abs(rhs), std::abs(lhs)});
}

std::vector<double> test_function(const Grid& grid, std::uint64_t seed, std::uint64_t i) {
    auto rng = sample_rng(seed, i);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int n = grid.n();
    std::vector<double> raw(static_cast<std::size_t>(n));
    for (double& x : raw) x = u(rng);
    std::vector<double> v(raw.size());
    for (int k = 0; k < n; ++k)
        v[static_cast<std::size_t>(k)] = (raw[static_cast<std::size_t>(grid.wrap(k - 1))] + raw[static_cast<std::size_t>(k)] +
                                          raw[static_cast<std::size_t>(grid.wrap(k + 1))]) / 3.0;
    if (i % 4 == 3) {
        std::uniform_int_distribution<int> cell(0, n - 1);
        v[static_cast<std::size_t>(cell(rng))] += 4.0 * u(rng);
    }
    return v;
}

Density test_density(const Grid& grid, std::uint64_t seed, std::uint64_t i) {
    std::vector<double> v = test_function(grid, seed, i);
    double mass = 0.0;
    for (double& x : v) {
        x = std::exp(3.0 * x);
        mass += x;
    }
    mass *= grid.delta();
    for (double& x : v) x /= mass;
    return Density(GridFunction(grid, std::move(v)), 1e-10);
}

double poincare_saturation(const Grid& grid) {
    std::vector<double> v(grid.size());
    for (int k = 0; k < grid.n(); ++k) v[static_cast<std::size_t>(k)] = std::cos(2.0 * std::numbers::pi * grid.center(k));
    const GridFunction f(grid, std::move(v));
    const GridFunction d = forward_diff(f);
    const double lhs = inner_delta(f, f);
    const double rhs = poincare_constant(grid) * inner_delta(d, d);
    return (rhs - lhs) / rhs;
}

InequalityReport poincare_suite(const Grid& grid, long samples, std::uint64_t seed) {
    return run_samples("poincare", samples, [&](std::uint64_t i) {
        GridFunction f = i == 0 ? GridFunction::zeros(grid) : mean_free(GridFunction(grid, test_function(grid, seed, i)));
        if (i == 1) {
            std::vector<double> v(grid.size());
            for (int k = 0; k < grid.n(); ++k) v[static_cast<std::size_t>(k)] = std::cos(2.0 * std::numbers::pi * grid.center(k));
            f = mean_free(GridFunction(grid, std::move(v)));
        }
        const GridFunction d = forward_diff(f);
        const double lhs = inner_delta(f, f);
        const double rhs = poincare_constant(grid) * inner_delta(d, d);
        return Sample{normalized_margin(lhs, rhs), fmt("N", grid.n()), f.vector()};
    });
}

InequalityReport lsi_suite(const Grid& grid, long samples, std::uint64_t seed) {
    const double c = 25.0 / (16.0 * std::numbers::pi * std::numbers::pi);
    return run_samples("lsi", samples, [&](std::uint64_t i) {
        std::vector<double> v = i == 0 ? std::vector<double>(grid.size(), 1.0) : test_function(grid, seed, i);
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm * grid.delta());
        if (norm == 0.0) return Sample{};
        for (double& x : v) x /= norm;
        const GridFunction f(grid, v);
        double lhs = 0.0;
        for (double x : v)
            if (x != 0.0) lhs += x * x * std::log(x * x);
        lhs *= grid.delta();
        const GridFunction d = forward_diff(f);
        const double m1 = normalized_margin(lhs, c * inner_delta(d, d));
        const Density rho = i == 0 ? Density::uniform(grid) : test_density(grid, seed, i);
        const double m2 = normalized_margin(entropy(rho), kLsiConstant * fisher(rho));
        if (m1 <= m2) return Sample{m1, "form f^2 log f^2", v};
        return Sample{m2, "form H <= C F", rho.vector()};
    });
}

InequalityReport gns_suite(const Grid& grid, double p, long samples, std::uint64_t seed) {
    if (!(p >= 2.0)) throw Error(ErrorCode::InvalidArgument, "gns_suite needs p >= 2");
    const double theta = (p - 2.0) / p;
    return run_samples("gns p=" + std::to_string(p), samples, [&](std::uint64_t i) {
        const GridFunction v(grid, i == 0 ? std::vector<double>(grid.size(), 0.7) : test_function(grid, seed, i));
        const double lhs = lp_norm(v, p);
        const double rhs = std::pow(lp_norm(v, 2.0), 1.0 - theta) * std::pow(h1_norm(v), theta);
        return Sample{normalized_margin(lhs, rhs), fmt("p", p), v.vector()};
    });
}

InequalityReport interpolation_suite(const Grid& grid, long samples, std::uint64_t seed) {
    return run_samples("interpolation", samples, [&](std::uint64_t i) {
        const GridFunction v(grid, test_function(grid, seed, 2 * i));
        const GridFunction w(grid, test_function(grid, seed, 2 * i + 1));
        const GridFunction lv = laplacian(v);
        const double lhs = inner_delta(forward_diff(v), forward_diff(w));
        const double rhs = std::sqrt(inner_delta(lv, lv)) * std::sqrt(inner_delta(w, w));
        std::vector<double> input = v.vector();
        input.insert(input.end(), w.vector().begin(), w.vector().end());
        return Sample{normalized_margin(lhs, rhs), "input is v then w", input};
    });
}

InequalityReport entropy_production_suite(const Grid& grid, long samples, std::uint64_t seed) {
    return run_samples("entropy_production", samples, [&](std::uint64_t i) {
        const Density rho = i == 0 ? Density::uniform(grid) : test_density(grid, seed, i);
        return Sample{normalized_margin(laplacian_sqrt_energy(rho), entropy_dissipation(rho)), fmt("N", grid.n()),
                      rho.vector()};
    });
}

double monster_margin(double u, double v) noexcept {
    const double uv = u * v;
    const double a = (u - 1.0) * (u - 1.0) * (u - 1.0) / (u + 1.0);
    const double b = (v - 1.0) * (v - 1.0) * (v - 1.0) / (v + 1.0);
    const double s = u + v - 2.0;
    return (uv - 1.0) * std::log(uv) + 0.5 * (a + b) - 0.25 * s * s;
}

double elementary_log_margin(double u, double v) noexcept {
    const double a = u - 1.0 / v;
    const double b = v - 1.0 / u;
    const double l = std::log(u * v);
    return a * a + b * b - 2.0 * l * l;
}

namespace {

struct ScalarSides {
    double lhs;
    double rhs;
};

InequalityReport scan(const std::string& name, double umax, double step,
                      const std::function<ScalarSides(double, double)>& sides) {
    if (!(step > 0.0) || !(umax >= step)) throw Error(ErrorCode::InvalidArgument, name + ": need 0 < step <= umax");
    const long n = static_cast<long>(std::floor(umax / step * (1.0 + 1e-12)));
    std::vector<double> row_min(static_cast<std::size_t>(n));
    std::vector<long> row_arg(static_cast<std::size_t>(n));
    parallel_for(row_min.size(), [&](std::size_t i) {
        const double u = static_cast<double>(i + 1) * step;
        double best = std::numeric_limits<double>::infinity();
        long arg = 0;
        for (long j = 0; j < n; ++j) {
            const double v = static_cast<double>(j + 1) * step;
            const ScalarSides s = sides(u, v);
            const double m = normalized_margin(s.lhs, s.rhs);
            if (m < best) {
                best = m;
                arg = j;
            }
        }
        row_min[i] = best;
        row_arg[i] = arg;
    });
    InequalityReport rep;
    rep.name = name;
    rep.samples = n * n;
    rep.tolerance = kSampleTolerance;
    std::size_t worst = 0;
    for (std::size_t i = 1; i < row_min.size(); ++i)
        if (row_min[i] < row_min[worst]) worst = i;
    const double u = static_cast<double>(worst + 1) * step;
    const double v = static_cast<double>(row_arg[worst] + 1) * step;
    rep.worst_margin = row_min[worst];
    rep.worst_case = fmt("u", u) + ", " + fmt("v", v);
    rep.worst_input = {u, v};
    rep.pass = rep.worst_margin >= -rep.tolerance;
    return rep;
}

}  // namespace

InequalityReport monster_scan(double umax, double step) {
    return scan("monster", umax, step, [](double u, double v) {
        const double s = u + v - 2.0;
        return ScalarSides{0.25 * s * s, monster_margin(u, v) + 0.25 * s * s};
    });
}

InequalityReport elementary_log_scan(double umax, double step) {
    return scan("elementary_log", umax, step, [](double u, double v) {
        const double l = std::log(u * v);
        return ScalarSides{2.0 * l * l, elementary_log_margin(u, v) + 2.0 * l * l};
    });
}

double short_time_constant(const Grid& grid, double r) noexcept {
    return r / (4.0 * poincare_constant(grid) * std::pow(r + 1.0, r + 1.0));
}

InequalityReport decay_suite(const Trajectory& traj) {
    InequalityReport rep;
    rep.name = "decay";
    rep.tolerance = kTrajectoryTolerance;
    const auto& rec = traj.records;
    const double c = kLsiConstant;
    const double c1 = short_time_constant(traj.grid, 1.0);
    const double c3 = short_time_constant(traj.grid, 3.0);

    // Tail of delta sum (laplacian sqrt rho)^2 over the recorded horizon, trapezoid rule.
    std::vector<double> tail(rec.size(), 0.0);
    for (std::size_t i = rec.size(); i-- > 1;)
        tail[i - 1] = tail[i] + 0.5 * (rec[i].t - rec[i - 1].t) *
                                    (rec[i].laplacian_sqrt_energy + rec[i - 1].laplacian_sqrt_energy);

    const char* names[5] = {"entropy 4C^2/t", "fisher 8C/t", "tail dissipation 4C^2/t (partial)",
                            "entropy (C_1 t)^-1", "entropy (C_3 t)^-1/3"};
    double worst[5];
    std::fill(std::begin(worst), std::end(worst), std::numeric_limits<double>::infinity());
    double worst_all = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const double t = rec[i].t;
        if (!(t > 0.0)) continue;
        const double h = rec[i].values.entropy;
        const double m[5] = {
            normalized_margin(h, 4.0 * c * c / t),
            normalized_margin(rec[i].values.fisher, 8.0 * c / t),
            normalized_margin(tail[i], 4.0 * c * c / t),
            normalized_margin(h, 1.0 / (c1 * t)),
            normalized_margin(h, std::pow(c3 * t, -1.0 / 3.0)),
        };
        ++rep.samples;
        for (int b = 0; b < 5; ++b) {
            worst[b] = std::min(worst[b], m[b]);
            if (m[b] < worst_all) {
                worst_all = m[b];
                rep.worst_case = std::string(names[b]) + " at " + fmt("t", t);
                rep.worst_input = {t, h, rec[i].values.fisher, tail[i]};
            }
        }
    }
    if (rep.samples == 0) return rep;
    rep.worst_margin = worst_all;
    for (int b = 0; b < 5; ++b) rep.components.emplace_back(names[b], worst[b]);
    rep.pass = rep.worst_margin >= -rep.tolerance;
    return rep;
}

}  // namespace dlss
