#ifndef EPIMACRO_H
#define EPIMACRO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum EpmStatus {
  EPM_STATUS_OK = 0,
  EPM_STATUS_NULL_POINTER = 1,
  EPM_STATUS_INVALID_ARGUMENT = 2,
  EPM_STATUS_PARSE = 3,
  EPM_STATUS_IO = 4,
  EPM_STATUS_SIMULATION = 5,
  EPM_STATUS_NOT_FOUND = 6,
  EPM_STATUS_BUFFER_TOO_SMALL = 7,
  EPM_STATUS_PANIC = 99,
} EpmStatus;

/**
 * Parameter set handle.
 */
typedef struct EpmParams EpmParams;

/**
 * Simulated trajectory handle.
 */
typedef struct EpmTrajectory EpmTrajectory;

/**
 * Headline numbers of a run compared against a reference run.
 */
typedef struct EpmSummary {
  double peak_active_infections;
  /**
   * Days after the first row.
   */
  int64_t peak_day;
  double total_deaths;
  double max_output_drop_pct;
  int64_t max_output_drop_day;
  double welfare;
  double max_euler_residual;
} EpmSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *epm_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *epm_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void epm_string_free(char *s);

/**
 * Default calibrated parameter set.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EpmStatus epm_params_default(struct EpmParams **out);

/**
 * Parses a parameter set from JSON text with every field present.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` valid for writes.
 */
enum EpmStatus epm_params_from_json(const char *json, struct EpmParams **out);

/**
 * Serialises a parameter set; free the result with [`epm_string_free`].
 *
 * # Safety
 * `params` must be a live handle and `out` valid for writes.
 */
enum EpmStatus epm_params_to_json(const struct EpmParams *params, char **out);

/**
 * Reads one field by name, e.g. `"b0"` or `"g_daily"`.
 *
 * # Safety
 * `params` must be a live handle, `name` nul-terminated, `out` writable.
 */
enum EpmStatus epm_params_get(const struct EpmParams *params, const char *name, double *out);

/**
 * Sets one field by name. The handle is left unchanged if the new set
 * would be invalid.
 *
 * # Safety
 * `params` must be a live handle and `name` nul-terminated.
 */
enum EpmStatus epm_params_set(struct EpmParams *params, const char *name, double value);

/**
 * # Safety
 * `params` must be null or a live handle not used afterwards.
 */
void epm_params_free(struct EpmParams *params);

/**
 * Runs a named preset: `"no-pandemic"` or `"no-intervention"`.
 *
 * # Safety
 * `params` must be a live handle, `name` nul-terminated, `out` writable.
 */
enum EpmStatus epm_run_preset(const struct EpmParams *params,
                              const char *name,
                              struct EpmTrajectory **out);

/**
 * Runs the no-intervention outbreak with a production cut of `intensity`
 * (a fraction in [0, 1)) for `weeks` weeks from `start` (`YYYY-MM-DD`).
 *
 * # Safety
 * `params` must be a live handle, `start` nul-terminated, `out` writable.
 */
enum EpmStatus epm_run_policy(const struct EpmParams *params,
                              const char *start,
                              double intensity,
                              uint32_t weeks,
                              struct EpmTrajectory **out);

/**
 * Runs a scenario given as JSON.
 *
 * # Safety
 * `params` must be a live handle, `json` nul-terminated, `out` writable.
 */
enum EpmStatus epm_run_scenario_json(const struct EpmParams *params,
                                     const char *json,
                                     struct EpmTrajectory **out);

/**
 * Number of daily rows.
 *
 * # Safety
 * `trajectory` must be a live handle and `out` writable.
 */
enum EpmStatus epm_trajectory_len(const struct EpmTrajectory *trajectory, size_t *out);

/**
 * Calendar date of the first row.
 *
 * # Safety
 * `trajectory` must be a live handle and the outputs writable.
 */
enum EpmStatus epm_trajectory_start(const struct EpmTrajectory *trajectory,
                                    int32_t *year,
                                    uint32_t *month,
                                    uint32_t *day);

/**
 * Copies one column (`N S I R D A K Y C H p`) into `buf`, which must hold
 * at least `len` values where `len` is the row count.
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum EpmStatus epm_trajectory_column(const struct EpmTrajectory *trajectory,
                                     const char *name,
                                     double *buf,
                                     size_t len);

/**
 * Writes the trajectory as CSV.
 *
 * # Safety
 * `trajectory` must be a live handle and `path` nul-terminated.
 */
enum EpmStatus epm_trajectory_write_csv(const struct EpmTrajectory *trajectory, const char *path);

/**
 * Summary of `trajectory` measured against `reference`, usually the
 * no-pandemic run.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum EpmStatus epm_trajectory_summary(const struct EpmTrajectory *trajectory,
                                      const struct EpmTrajectory *reference,
                                      struct EpmSummary *out);

/**
 * # Safety
 * `trajectory` must be null or a live handle not used afterwards.
 */
void epm_trajectory_free(struct EpmTrajectory *trajectory);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EPIMACRO_H */
