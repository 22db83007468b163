#ifndef UAVCOV_H
#define UAVCOV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum UavcovStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  UAVCOV_STATUS_OK = 0,
  UAVCOV_STATUS_NULL_POINTER = 1,
  UAVCOV_STATUS_INVALID_ARGUMENT = 2,
  UAVCOV_STATUS_NUMERICAL = 3,
  UAVCOV_STATUS_NO_ROOT = 4,
  UAVCOV_STATUS_PANIC = 5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum UavcovStatus UavcovStatus;
#else
typedef int32_t UavcovStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum UavcovMetric
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  UAVCOV_METRIC_SIR = 0,
  UAVCOV_METRIC_SINR = 1,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum UavcovMetric UavcovMetric;
#else
typedef int32_t UavcovMetric;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque network configuration.
 */
typedef struct UavcovConfig UavcovConfig;

typedef struct UavcovCoverage {
  double total;
  double los_term;
  double nlos_term;
} UavcovCoverage;

typedef struct UavcovMcEstimate {
  double coverage;
  double stderr;
  uint64_t trials;
  uint64_t seed;
} UavcovMcEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a configuration. On success `*out` owns a new handle.
 *
 * # Safety
 * `out` must be NULL or valid for writing one pointer.
 */
UavcovStatus uavcov_config_new(double density,
                               double altitude,
                               double los_radius,
                               double tx_power,
                               double noise_power,
                               double alpha_los,
                               double alpha_nlos,
                               double a_los,
                               double a_nlos,
                               uint32_t m_los,
                               struct UavcovConfig **out);

/**
 * Reference network: 1 GBS/km², 50 m altitude, 200 m LoS radius, `M_L = 3`,
 * 40 dBm transmit power, −97 dBm noise, path-loss exponents 2.1/4 and
 * reference gains −41.1/−32.9 dB.
 */
struct UavcovConfig *uavcov_config_default(void);

/**
 * # Safety
 * `cfg` must be NULL or a handle from this library not yet freed.
 */
void uavcov_config_free(struct UavcovConfig *cfg);

/**
 * # Safety
 * `cfg` must be NULL or a live handle.
 */
UavcovStatus uavcov_config_set_density(struct UavcovConfig *cfg, double density);

/**
 * # Safety
 * `cfg` must be NULL or a live handle; `out` NULL or writable.
 */
UavcovStatus uavcov_config_get_density(const struct UavcovConfig *cfg, double *out);

/**
 * SIR coverage probability at linear threshold `tau`.
 *
 * # Safety
 * `cfg` must be NULL or a live handle; `out` NULL or writable.
 */
UavcovStatus uavcov_coverage(const struct UavcovConfig *cfg,
                             double tau,
                             uint32_t quad_order,
                             struct UavcovCoverage *out);

/**
 * Lower bound on the coverage-maximizing density (m⁻²).
 *
 * # Safety
 * `cfg` must be NULL or a live handle; `out` NULL or writable.
 */
UavcovStatus uavcov_lambda_lower_bound(const struct UavcovConfig *cfg,
                                       double tau,
                                       uint32_t quad_order,
                                       double *out);

/**
 * Monte Carlo coverage under the LoS ball model. `metric` is a
 * [`UavcovMetric`] value.
 *
 * # Safety
 * `cfg` must be NULL or a live handle; `out` NULL or writable.
 */
UavcovStatus uavcov_simulate(const struct UavcovConfig *cfg,
                             double tau,
                             uint64_t trials,
                             uint64_t seed,
                             int32_t metric,
                             struct UavcovMcEstimate *out);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length including
 * the terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be NULL or valid for writing `len` bytes.
 */
size_t uavcov_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *uavcov_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UAVCOV_H */
