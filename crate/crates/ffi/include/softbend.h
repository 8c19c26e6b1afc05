#ifndef SOFTBEND_H
#define SOFTBEND_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
enum SbStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_INVALID_UTF8 = 2,
  SB_STATUS_CONFIG = 3,
  SB_STATUS_RUNTIME = 4,
  SB_STATUS_IO = 5,
  SB_STATUS_OUT_OF_BOUNDS = 6,
  SB_STATUS_PANIC = 7,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SbStatus SbStatus;
#else
typedef int32_t SbStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Controller variants.
 */
enum SbMode
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  SB_MODE_PID = 0,
  SB_MODE_FF_STATIC = 1,
  SB_MODE_FF_ADAPTIVE = 2,
  SB_MODE_FB_ADAPTIVE = 3,
  SB_MODE_TWO_DOF = 4,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum SbMode SbMode;
#else
typedef int32_t SbMode;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque run configuration.
 */
typedef struct SbConfig SbConfig;

/**
 * Opaque episode trace.
 */
typedef struct SbTrace SbTrace;

/**
 * One logged tick.
 */
typedef struct SbSample {
  double t_s;
  double theta_ref_deg;
  double theta_meas_deg;
  double error_deg;
  double p_ref_kpa;
  double p_meas_kpa;
  double u_v;
  double kp_gain;
  double kff_gain;
} SbSample;

typedef struct SbMetrics {
  double e_max_deg;
  double e_min_deg;
  double abs_e_ave_pct;
  double rmse_deg;
  double var_deg2;
} SbMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or null. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *sb_last_error(void);

/**
 * Default configuration. Never null.
 */
struct SbConfig *sb_config_default(void);

/**
 * Loads and validates a TOML config file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
int32_t sb_config_load(const char *path, struct SbConfig **out);

/**
 * Parses and validates config text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
int32_t sb_config_parse(const char *text, struct SbConfig **out);

/**
 * Sets a numeric entry by dotted key, e.g. `tuner.kappa`. The config is
 * unchanged on failure.
 *
 * # Safety
 * `cfg` must come from this library; `key` must be a NUL-terminated string.
 */
int32_t sb_config_set(struct SbConfig *cfg, const char *key, double value);

/**
 * `mode` is one of the `SbMode` values.
 *
 * # Safety
 * `cfg` must come from this library.
 */
int32_t sb_config_set_mode(struct SbConfig *cfg, int32_t mode);

/**
 * # Safety
 * `cfg` must come from this library.
 */
int32_t sb_config_set_seed(struct SbConfig *cfg, uint64_t seed);

/**
 * Releases a config. Null is ignored.
 *
 * # Safety
 * `cfg` must come from this library and not be used afterwards.
 */
void sb_config_free(struct SbConfig *cfg);

/**
 * Runs one episode in the config's mode.
 *
 * # Safety
 * `cfg` must come from this library; `out` must be writable.
 */
int32_t sb_run_episode(const struct SbConfig *cfg, struct SbTrace **out);

/**
 * Number of samples; 0 for null.
 *
 * # Safety
 * `trace` must be null or come from this library.
 */
size_t sb_trace_len(const struct SbTrace *trace);

/**
 * # Safety
 * `trace` must come from this library; `out` must be writable.
 */
int32_t sb_trace_sample(const struct SbTrace *trace, size_t index, struct SbSample *out);

/**
 * # Safety
 * `trace` must come from this library; `out` must be writable.
 */
int32_t sb_trace_metrics(const struct SbTrace *trace, struct SbMetrics *out);

/**
 * Writes the trace CSV.
 *
 * # Safety
 * `trace` must come from this library; `path` must be a NUL-terminated string.
 */
int32_t sb_trace_write_csv(const struct SbTrace *trace, const char *path);

/**
 * Releases a trace. Null is ignored.
 *
 * # Safety
 * `trace` must come from this library and not be used afterwards.
 */
void sb_trace_free(struct SbTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOFTBEND_H */
