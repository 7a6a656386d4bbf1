#include "dlsslab/dlsslab.h"

#include <cstdio>
#include <cstring>
#include <exception>
#include <sstream>
#include <string>

#include "dlsslab/error.hpp"
#include "dlsslab/flow.hpp"
#include "dlsslab/functionals.hpp"
#include "dlsslab/harness.hpp"
#include "dlsslab/metric.hpp"

struct dlsslab_config {
    dlss::Config cfg;
};

struct dlsslab_trajectory {
    dlss::Trajectory traj;
};

namespace {

thread_local std::string last_error;

dlsslab_status status_of(dlss::ErrorCode code) {
    using dlss::ErrorCode;
    switch (code) {
        case ErrorCode::InvalidArgument: return DLSSLAB_INVALID_ARGUMENT;
        case ErrorCode::NonZeroMean: return DLSSLAB_NON_ZERO_MEAN;
        case ErrorCode::QuadratureFailure: return DLSSLAB_QUADRATURE_FAILURE;
        case ErrorCode::NewtonDivergence: return DLSSLAB_NEWTON_DIVERGENCE;
        case ErrorCode::PositivityLoss: return DLSSLAB_POSITIVITY_LOSS;
        case ErrorCode::PositivityRequired: return DLSSLAB_POSITIVITY_REQUIRED;
        case ErrorCode::StepFailure: return DLSSLAB_STEP_FAILURE;
        case ErrorCode::Infeasible: return DLSSLAB_INFEASIBLE;
        case ErrorCode::NoProgress: return DLSSLAB_NO_PROGRESS;
        case ErrorCode::Config: return DLSSLAB_CONFIG_ERROR;
        case ErrorCode::Io: return DLSSLAB_IO_ERROR;
    }
    return DLSSLAB_INTERNAL_ERROR;
}

dlsslab_status fail(dlsslab_status s, const std::string& msg) {
    last_error = msg;
    return s;
}

template <class F>
dlsslab_status guarded(F&& f) {
    last_error.clear();
    try {
        f();
        return DLSSLAB_OK;
    } catch (const dlss::Error& e) {
        return fail(status_of(e.code()), e.what());
    } catch (const std::exception& e) {
        return fail(DLSSLAB_INTERNAL_ERROR, e.what());
    } catch (...) {
        return fail(DLSSLAB_INTERNAL_ERROR, "unknown exception");
    }
}

#define DLSS_REQUIRE(cond, what) \
    if (!(cond)) return fail(DLSSLAB_INVALID_ARGUMENT, what)

dlss::Density density_of(std::size_t n, const double* rho) {
    if (n < 2 || n > 1u << 24) throw dlss::Error(dlss::ErrorCode::InvalidArgument, "grid size must be in [2, 2^24]");
    return dlss::Density(dlss::Grid(static_cast<int>(n)), std::vector<double>(rho, rho + n), 1e-10);
}

void fill(const dlss::StepRecord& r, dlsslab_record* out) {
    out->t = r.t;
    out->dt = r.dt;
    out->newton_iterations = r.newton_iterations;
    out->mass = r.values.mass;
    out->entropy = r.values.entropy;
    out->fisher = r.values.fisher;
    out->heat_capacity = r.values.heat_capacity;
    out->min_density = r.values.min_density;
}

}  // namespace

extern "C" {

const char* dlsslab_version(void) { return dlss::version(); }

const char* dlsslab_status_name(dlsslab_status status) {
    switch (status) {
        case DLSSLAB_OK: return "ok";
        case DLSSLAB_INVALID_ARGUMENT: return "invalid argument";
        case DLSSLAB_NON_ZERO_MEAN: return "non-zero mean";
        case DLSSLAB_QUADRATURE_FAILURE: return "quadrature failure";
        case DLSSLAB_NEWTON_DIVERGENCE: return "Newton divergence";
        case DLSSLAB_POSITIVITY_LOSS: return "positivity loss";
        case DLSSLAB_POSITIVITY_REQUIRED: return "positivity required";
        case DLSSLAB_STEP_FAILURE: return "step failure";
        case DLSSLAB_INFEASIBLE: return "infeasible";
        case DLSSLAB_NO_PROGRESS: return "no progress";
        case DLSSLAB_CONFIG_ERROR: return "config error";
        case DLSSLAB_IO_ERROR: return "I/O error";
        case DLSSLAB_BUFFER_TOO_SMALL: return "buffer too small";
        case DLSSLAB_INTERNAL_ERROR: return "internal error";
    }
    return "unknown status";
}

const char* dlsslab_last_error(void) { return last_error.c_str(); }

dlsslab_status dlsslab_config_new(dlsslab_config** out) {
    DLSS_REQUIRE(out, "out is null");
    *out = nullptr;
    return guarded([&] { *out = new dlsslab_config; });
}

void dlsslab_config_free(dlsslab_config* cfg) { delete cfg; }

dlsslab_status dlsslab_config_set(dlsslab_config* cfg, const char* key, const char* value) {
    DLSS_REQUIRE(cfg && key && value, "null argument");
    return guarded([&] { cfg->cfg.set(key, value); });
}

dlsslab_status dlsslab_config_assign(dlsslab_config* cfg, const char* assignment) {
    DLSS_REQUIRE(cfg && assignment, "null argument");
    return guarded([&] { cfg->cfg.assign(assignment); });
}

dlsslab_status dlsslab_config_load_file(dlsslab_config* cfg, const char* path) {
    DLSS_REQUIRE(cfg && path, "null argument");
    return guarded([&] { cfg->cfg.load_file(path); });
}

dlsslab_status dlsslab_config_get(const dlsslab_config* cfg, const char* key, char* buf, size_t cap, size_t* len) {
    DLSS_REQUIRE(cfg && key, "null argument");
    std::string v;
    const dlsslab_status s = guarded([&] { v = cfg->cfg.get(key); });
    if (s != DLSSLAB_OK) return s;
    if (len) *len = v.size();
    if (!buf || cap < v.size() + 1) return fail(DLSSLAB_BUFFER_TOO_SMALL, "buffer too small");
    std::memcpy(buf, v.c_str(), v.size() + 1);
    return DLSSLAB_OK;
}

dlsslab_status dlsslab_config_hash(const dlsslab_config* cfg, uint64_t* out) {
    DLSS_REQUIRE(cfg && out, "null argument");
    return guarded([&] { *out = cfg->cfg.hash(); });
}

size_t dlsslab_config_key_count(void) { return dlss::Config::keys().size(); }

const char* dlsslab_config_key(size_t i) {
    static const std::vector<std::string> keys = dlss::Config::keys();
    return i < keys.size() ? keys[i].c_str() : nullptr;
}

int dlsslab_run(const char* command, const dlsslab_config* cfg, dlsslab_log_fn fn, void* user) {
    last_error.clear();
    if (!command || !cfg) {
        last_error = "null argument";
        return dlss::kExitConfig;
    }
    std::ostringstream log;
    int code = dlss::kExitSolver;
    try {
        code = dlss::run_command(command, cfg->cfg, log);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
    }
    std::istringstream lines(log.str());
    for (std::string line; std::getline(lines, line);) {
        if (code != dlss::kExitOk && line.rfind("error", 0) == 0) last_error = line;
        if (fn)
            fn(line.c_str(), user);
        else
            std::fprintf(stderr, "%s\n", line.c_str());
    }
    return code;
}

dlsslab_status dlsslab_rhs(size_t n, const double* rho, double* out) {
    DLSS_REQUIRE(rho && out, "null argument");
    return guarded([&] {
        const dlss::Density d = density_of(n, rho);
        if (!dlss::is_positive(d)) throw dlss::Error(dlss::ErrorCode::PositivityRequired, "density must be positive");
        const dlss::GridFunction r = dlss::rhs(d);
        std::copy(r.values().begin(), r.values().end(), out);
    });
}

dlsslab_status dlsslab_functionals(size_t n, const double* rho, dlsslab_record* out) {
    DLSS_REQUIRE(rho && out, "null argument");
    return guarded([&] {
        const dlss::Density d = density_of(n, rho);
        dlss::StepRecord r;
        r.values = dlss::evaluate_functionals(d);
        fill(r, out);
    });
}

dlsslab_status dlsslab_distance_bounds(size_t n, const double* rho0, const double* rho1, int slices,
                                       dlsslab_distance* out) {
    DLSS_REQUIRE(rho0 && rho1 && out, "null argument");
    return guarded([&] {
        dlss::MetricConfig mc;
        mc.S = slices;
        mc.validate();
        const dlss::DistanceReport r = dlss::distance_report(density_of(n, rho0), density_of(n, rho1), mc);
        out->lower = r.lower;
        out->upper_construction = r.upper_construction;
        out->upper_optimized = r.upper_optimized;
        out->upper_optimized_2s = r.upper_optimized_2s;
        out->iterations = r.iterations;
        out->converged = r.converged ? 1 : 0;
    });
}

dlsslab_status dlsslab_simulate(const dlsslab_config* cfg, dlsslab_trajectory** out) {
    DLSS_REQUIRE(cfg && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        const dlss::SolverConfig sc = dlss::solver_config(cfg->cfg);
        const dlss::Density rho0 = dlss::initial_density(dlss::parse_datum(cfg->cfg.get("datum")), cfg->cfg.get_int("n"));
        auto* t = new dlsslab_trajectory{dlss::simulate(rho0, sc)};
        *out = t;
    });
}

void dlsslab_trajectory_free(dlsslab_trajectory* traj) { delete traj; }

size_t dlsslab_trajectory_grid(const dlsslab_trajectory* traj) { return traj ? traj->traj.grid.size() : 0; }

size_t dlsslab_trajectory_records(const dlsslab_trajectory* traj) { return traj ? traj->traj.records.size() : 0; }

dlsslab_status dlsslab_trajectory_record(const dlsslab_trajectory* traj, size_t i, dlsslab_record* out) {
    DLSS_REQUIRE(traj && out, "null argument");
    DLSS_REQUIRE(i < traj->traj.records.size(), "record index out of range");
    fill(traj->traj.records[i], out);
    return DLSSLAB_OK;
}

size_t dlsslab_trajectory_states(const dlsslab_trajectory* traj) { return traj ? traj->traj.states.size() : 0; }

dlsslab_status dlsslab_trajectory_state(const dlsslab_trajectory* traj, size_t i, double* t, double* out, size_t n) {
    DLSS_REQUIRE(traj && out, "null argument");
    DLSS_REQUIRE(i < traj->traj.states.size(), "state index out of range");
    const dlss::StoredState& s = traj->traj.states[i];
    if (n < s.rho.size()) return fail(DLSSLAB_BUFFER_TOO_SMALL, "buffer too small");
    std::copy(s.rho.values().begin(), s.rho.values().end(), out);
    if (t) *t = traj->traj.records[s.record].t;
    return DLSSLAB_OK;
}

}  // extern "C"
