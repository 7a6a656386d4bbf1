#ifndef DLSSLAB_H
#define DLSSLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(DLSSLAB_BUILDING)
#define DLSSLAB_API __attribute__((visibility("default")))
#else
#define DLSSLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dlsslab_status {
    DLSSLAB_OK = 0,
    DLSSLAB_INVALID_ARGUMENT = 1,
    DLSSLAB_NON_ZERO_MEAN = 2,
    DLSSLAB_QUADRATURE_FAILURE = 3,
    DLSSLAB_NEWTON_DIVERGENCE = 4,
    DLSSLAB_POSITIVITY_LOSS = 5,
    DLSSLAB_POSITIVITY_REQUIRED = 6,
    DLSSLAB_STEP_FAILURE = 7,
    DLSSLAB_INFEASIBLE = 8,
    DLSSLAB_NO_PROGRESS = 9,
    DLSSLAB_CONFIG_ERROR = 10,
    DLSSLAB_IO_ERROR = 11,
    DLSSLAB_BUFFER_TOO_SMALL = 12,
    DLSSLAB_INTERNAL_ERROR = 13
} dlsslab_status;

typedef struct dlsslab_config dlsslab_config;
typedef struct dlsslab_trajectory dlsslab_trajectory;

/* Receives one message per call; text is only valid during the call. */
typedef void (*dlsslab_log_fn)(const char* text, void* user);

typedef struct dlsslab_record {
    double t;
    double dt;
    int newton_iterations;
    double mass;
    double entropy;
    double fisher;
    double heat_capacity;
    double min_density;
} dlsslab_record;

typedef struct dlsslab_distance {
    double lower;
    double upper_construction;
    double upper_optimized;
    double upper_optimized_2s;
    int iterations;
    int converged;
} dlsslab_distance;

DLSSLAB_API const char* dlsslab_version(void);
DLSSLAB_API const char* dlsslab_status_name(dlsslab_status status);
/* Message of the last failing call on this thread; empty when none. */
DLSSLAB_API const char* dlsslab_last_error(void);

DLSSLAB_API dlsslab_status dlsslab_config_new(dlsslab_config** out);
DLSSLAB_API void dlsslab_config_free(dlsslab_config* cfg);
DLSSLAB_API dlsslab_status dlsslab_config_set(dlsslab_config* cfg, const char* key, const char* value);
/* "key=value" */
DLSSLAB_API dlsslab_status dlsslab_config_assign(dlsslab_config* cfg, const char* assignment);
DLSSLAB_API dlsslab_status dlsslab_config_load_file(dlsslab_config* cfg, const char* path);
/* Copies the value with its terminator; *len gets the length without it. */
DLSSLAB_API dlsslab_status dlsslab_config_get(const dlsslab_config* cfg, const char* key, char* buf, size_t cap,
                                              size_t* len);
DLSSLAB_API dlsslab_status dlsslab_config_hash(const dlsslab_config* cfg, uint64_t* out);
DLSSLAB_API size_t dlsslab_config_key_count(void);
DLSSLAB_API const char* dlsslab_config_key(size_t i);

/* Runs a subcommand and returns its process exit code (0, 2, 3 or 4).
   Log lines go to fn, or to stderr when fn is NULL. */
DLSSLAB_API int dlsslab_run(const char* command, const dlsslab_config* cfg, dlsslab_log_fn fn, void* user);

/* Kernels on a positive density of n cells with unit mass (delta = 1/n). */
DLSSLAB_API dlsslab_status dlsslab_rhs(size_t n, const double* rho, double* out);
DLSSLAB_API dlsslab_status dlsslab_functionals(size_t n, const double* rho, dlsslab_record* out);
DLSSLAB_API dlsslab_status dlsslab_distance_bounds(size_t n, const double* rho0, const double* rho1, int slices,
                                                   dlsslab_distance* out);

/* Simulation from the datum, grid and solver keys of cfg. */
DLSSLAB_API dlsslab_status dlsslab_simulate(const dlsslab_config* cfg, dlsslab_trajectory** out);
DLSSLAB_API void dlsslab_trajectory_free(dlsslab_trajectory* traj);
DLSSLAB_API size_t dlsslab_trajectory_grid(const dlsslab_trajectory* traj);
DLSSLAB_API size_t dlsslab_trajectory_records(const dlsslab_trajectory* traj);
DLSSLAB_API dlsslab_status dlsslab_trajectory_record(const dlsslab_trajectory* traj, size_t i, dlsslab_record* out);
DLSSLAB_API size_t dlsslab_trajectory_states(const dlsslab_trajectory* traj);
/* Stored state i into out[0..n), its time into *t. */
DLSSLAB_API dlsslab_status dlsslab_trajectory_state(const dlsslab_trajectory* traj, size_t i, double* t, double* out,
                                                    size_t n);

#ifdef __cplusplus
}
#endif

#endif
