#ifndef SIMISAC_H
#define SIMISAC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SIMISAC_BASELINE_PROPOSED = 0,
  SIMISAC_BASELINE_RANDOM_SIM = 1,
  SIMISAC_BASELINE_NO_SIM = 2,
  SIMISAC_BASELINE_COMM_ONLY = 3,
} SimisacBaseline;

typedef enum {
  SIMISAC_STATUS_OK = 0,
  SIMISAC_STATUS_NULL_POINTER = 1,
  SIMISAC_STATUS_INVALID_UTF8 = 2,
  SIMISAC_STATUS_INVALID_CONFIG = 3,
  SIMISAC_STATUS_PARSE = 4,
  SIMISAC_STATUS_DOMAIN = 5,
  SIMISAC_STATUS_INFEASIBLE = 6,
  SIMISAC_STATUS_IO = 7,
  SIMISAC_STATUS_PANIC = 8,
  SIMISAC_STATUS_INTERNAL = 9,
} SimisacStatus;

/**
 * Opaque scenario configuration.
 */
typedef struct SimisacConfig SimisacConfig;

/**
 * Opaque episode trace.
 */
typedef struct SimisacTrace SimisacTrace;

/**
 * Scalar episode summary.
 */
typedef struct {
  double objective;
  double mean_ee_embb;
  double mean_ee_urllc;
  /**
   * Average of the per-target mean AoI.
   */
  double mean_aoi;
  double violation_rate;
  double mean_backlog;
  size_t minislots;
  size_t flagged;
} SimisacSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread, or NULL after a
 * success. The pointer stays valid until the next call on the same thread.
 */
const char *simisac_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *simisac_version(void);

/**
 * Allocate the desk-scale default configuration.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
SimisacStatus simisac_config_default(SimisacConfig **out);

/**
 * Parse a `key = value` configuration text. Unset keys keep their defaults.
 *
 * # Safety
 * `src` must be a valid NUL-terminated string and `out` a valid pointer to
 * writable storage for one handle.
 */
SimisacStatus simisac_config_parse(const char *src, SimisacConfig **out);

/**
 * Set one configuration key using the same syntax as the text format.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` valid NUL-terminated strings.
 */
SimisacStatus simisac_config_set(SimisacConfig *cfg, const char *key, const char *value);

/**
 * Check a configuration. Writes the number of violations to `out_count`
 * and returns `INVALID_CONFIG` when there are any.
 *
 * # Safety
 * `cfg` must be a live handle; `out_count` may be NULL.
 */
SimisacStatus simisac_config_validate(const SimisacConfig *cfg, size_t *out_count);

/**
 * Render a configuration as text. Free the result with [`simisac_string_free`].
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer.
 */
SimisacStatus simisac_config_to_string(const SimisacConfig *cfg, char **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle from this library not yet freed.
 */
void simisac_config_free(SimisacConfig *cfg);

/**
 * Run one episode.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a valid pointer to writable storage.
 */
SimisacStatus simisac_run_episode(const SimisacConfig *cfg,
                                  SimisacBaseline baseline,
                                  uint64_t seed,
                                  SimisacTrace **out);

/**
 * # Safety
 * `trace` must be a live handle; `out` a valid pointer.
 */
SimisacStatus simisac_trace_summary(const SimisacTrace *trace, SimisacSummary *out);

/**
 * Full trace text. Free the result with [`simisac_string_free`].
 *
 * # Safety
 * `trace` must be a live handle; `out` a valid pointer.
 */
SimisacStatus simisac_trace_text(const SimisacTrace *trace, char **out);

/**
 * # Safety
 * `trace` must be NULL or a handle from this library not yet freed.
 */
void simisac_trace_free(SimisacTrace *trace);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library not yet freed.
 */
void simisac_string_free(char *s);

/**
 * Inverse Gaussian tail function.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
SimisacStatus simisac_qfunc_inv(double p, double *out);

/**
 * Finite-blocklength rate in bit/s for one resource block.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
SimisacStatus simisac_fbl_rate(double gamma,
                               double bandwidth,
                               size_t minislots,
                               double blocklength,
                               double decode_err,
                               double *out);

/**
 * Smallest count whose Poisson CDF reaches `gamma`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
SimisacStatus simisac_poisson_icdf(double mean, double gamma, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIMISAC_H */
