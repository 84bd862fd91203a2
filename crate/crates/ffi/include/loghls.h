#ifndef LOGHLS_H
#define LOGHLS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes. Library error kinds map one to one onto codes 10 and up.
 */
typedef enum LoghlsStatus {
  LOGHLS_STATUS_OK = 0,
  LOGHLS_STATUS_NULL_POINTER = 1,
  LOGHLS_STATUS_INVALID_UTF8 = 2,
  LOGHLS_STATUS_BUFFER_TOO_SMALL = 3,
  LOGHLS_STATUS_PANIC = 4,
  LOGHLS_STATUS_DIMENSION = 10,
  LOGHLS_STATUS_DOMAIN = 11,
  LOGHLS_STATUS_NORMALIZATION = 12,
  LOGHLS_STATUS_PRECONDITION = 13,
  LOGHLS_STATUS_PARAMETER = 14,
  LOGHLS_STATUS_CONVERGENCE = 15,
  LOGHLS_STATUS_POSITIVITY = 16,
  LOGHLS_STATUS_STEP_SIZE = 17,
  LOGHLS_STATUS_CONSERVATION = 18,
  LOGHLS_STATUS_PARSE = 19,
  LOGHLS_STATUS_IO = 20,
} LoghlsStatus;

/*
 Which flow [`loghls_flow_run`] integrates.
 */
typedef enum LoghlsFlowKind {
  LOGHLS_FLOW_KIND_HEAT = 0,
  LOGHLS_FLOW_KIND_KELLER_SEGEL = 1,
} LoghlsFlowKind;

/*
 Run configuration; starts from the library defaults.
 */
typedef struct LoghlsConfig LoghlsConfig;

/*
 A log-uniform radial grid on which callers sample densities.
 */
typedef struct LoghlsRadialGrid LoghlsRadialGrid;

/*
 A parsed input spec.
 */
typedef struct LoghlsSpec LoghlsSpec;

/*
 A sampled flow trajectory.
 */
typedef struct LoghlsTrajectory LoghlsTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on this thread.
 */
const char *loghls_last_error(void);

/*
 Static name of a status code.
 */
const char *loghls_status_name(enum LoghlsStatus status);

/*
 Release a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void loghls_string_free(char *s);

struct LoghlsConfig *loghls_config_new(void);

/*
 Set one configuration key, using the same names and value syntax as the
 CLI configuration file. The whole configuration is validated afterwards
 and left unchanged when invalid.

 # Safety
 `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum LoghlsStatus loghls_config_set(struct LoghlsConfig *cfg, const char *key, const char *value);

/*
 # Safety
 `cfg` must be null or a live handle from [`loghls_config_new`].
 */
void loghls_config_free(struct LoghlsConfig *cfg);

/*
 Parse an input spec such as `gaussian:sigma=2` or `1+0.5*P1`.

 # Safety
 `src` must be a NUL-terminated string and `out` writable.
 */
enum LoghlsStatus loghls_spec_parse(const char *src, struct LoghlsSpec **out);

/*
 Canonical text of a spec; parsing it gives the same spec back.

 # Safety
 `spec` must be a live handle and `out` writable.
 */
enum LoghlsStatus loghls_spec_to_string(const struct LoghlsSpec *spec, char **out);

/*
 # Safety
 `spec` must be null or a live handle from [`loghls_spec_parse`].
 */
void loghls_spec_free(struct LoghlsSpec *spec);

/*
 One named value from the `eval` report, e.g. `free_energy` or `onofri`.

 # Safety
 Handles must be live, `name` NUL-terminated and `out` writable.
 */
enum LoghlsStatus loghls_eval(const struct LoghlsSpec *spec,
                              const struct LoghlsConfig *cfg,
                              const char *name,
                              double *out);

/*
 Full `eval` report as JSON.

 # Safety
 Handles must be live and `out` writable.
 */
enum LoghlsStatus loghls_eval_json(const struct LoghlsSpec *spec,
                                   const struct LoghlsConfig *cfg,
                                   char **out);

/*
 Stability certificates for the input's domain as JSON; `pass` receives 1
 when all of them pass. Either output may be null.

 # Safety
 Handles must be live; non-null outputs writable.
 */
enum LoghlsStatus loghls_stability(const struct LoghlsSpec *spec,
                                   const struct LoghlsConfig *cfg,
                                   char **json,
                                   int *pass);

/*
 A log-uniform radial grid from `r_min` to `r_max` with `n` nodes.

 # Safety
 `out` must be writable.
 */
enum LoghlsStatus loghls_radial_grid_new(double r_min,
                                         double r_max,
                                         size_t n,
                                         struct LoghlsRadialGrid **out);

/*
 # Safety
 `grid` must be a live handle.
 */
size_t loghls_radial_grid_len(const struct LoghlsRadialGrid *grid);

/*
 Copy the grid radii into `buf`, which must hold `len` >= grid length values.

 # Safety
 `grid` must be live and `buf` valid for `len` writes.
 */
enum LoghlsStatus loghls_radial_grid_nodes(const struct LoghlsRadialGrid *grid,
                                           double *buf,
                                           size_t len);

/*
 # Safety
 `grid` must be null or a live handle.
 */
void loghls_radial_grid_free(struct LoghlsRadialGrid *grid);

/*
 Planar free energy of a radial density sampled at the grid nodes.
 `entropy` and `interaction` receive the two parts and may be null.

 # Safety
 `grid` must be live, `rho` valid for `len` reads, `free_energy` writable.
 */
enum LoghlsStatus loghls_radial_free_energy(const struct LoghlsRadialGrid *grid,
                                            const double *rho,
                                            size_t len,
                                            double *free_energy,
                                            double *entropy,
                                            double *interaction);

/*
 Run the heat flow (Legendre spec) or Keller-Segel (`8pi*<planar spec>`).

 # Safety
 Handles must be live and `out` writable.
 */
enum LoghlsStatus loghls_flow_run(enum LoghlsFlowKind kind,
                                  const struct LoghlsSpec *spec,
                                  const struct LoghlsConfig *cfg,
                                  struct LoghlsTrajectory **out);

/*
 Number of samples.

 # Safety
 `traj` must be a live handle.
 */
size_t loghls_trajectory_len(const struct LoghlsTrajectory *traj);

/*
 1 when the run satisfied its monotonicity and bound checks, else 0.

 # Safety
 `traj` must be a live handle.
 */
int loghls_trajectory_pass(const struct LoghlsTrajectory *traj);

/*
 Copy a column (`t`, `free_energy`, `distance_L1`, `dissipation` or
 `mass_error`) into `buf`, which must hold at least the trajectory length.

 # Safety
 `traj` must be live, `column` NUL-terminated, `buf` valid for `len` writes.
 */
enum LoghlsStatus loghls_trajectory_column(const struct LoghlsTrajectory *traj,
                                           const char *column,
                                           double *buf,
                                           size_t len);

/*
 Trajectory with diagnostics as JSON.

 # Safety
 `traj` must be live and `out` writable.
 */
enum LoghlsStatus loghls_trajectory_json(const struct LoghlsTrajectory *traj, char **out);

/*
 # Safety
 `traj` must be null or a live handle.
 */
void loghls_trajectory_free(struct LoghlsTrajectory *traj);

/*
 Run acceptance criteria (`ids`, or all when `n_ids` is 0). `json` and
 `pass` may be null.

 # Safety
 `cfg` must be live, `ids` valid for `n_ids` reads, non-null outputs writable.
 */
enum LoghlsStatus loghls_suite_run(const struct LoghlsConfig *cfg,
                                   const size_t *ids,
                                   size_t n_ids,
                                   char **json,
                                   int *pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOGHLS_H */
