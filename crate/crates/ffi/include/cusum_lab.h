/* SPDX-License-Identifier: MIT OR Apache-2.0 */

#ifndef CUSUM_LAB_H
#define CUSUM_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CusumLabStatus {
  CUSUM_LAB_STATUS_OK = 0,
  CUSUM_LAB_STATUS_INVALID_INPUT = 1,
  CUSUM_LAB_STATUS_INSUFFICIENT_DATA = 2,
  CUSUM_LAB_STATUS_DEGENERATE_CONFIG = 3,
  CUSUM_LAB_STATUS_NOT_POSITIVE_DEFINITE = 4,
  CUSUM_LAB_STATUS_DOMAIN = 5,
  CUSUM_LAB_STATUS_BOUND_UNDEFINED = 6,
  CUSUM_LAB_STATUS_DEGENERATE_PROBE = 7,
  CUSUM_LAB_STATUS_CONFIG = 8,
  CUSUM_LAB_STATUS_IO = 9,
  CUSUM_LAB_STATUS_NULL_POINTER = 10,
  CUSUM_LAB_STATUS_BUFFER_TOO_SMALL = 11,
  CUSUM_LAB_STATUS_PANIC = 12,
} CusumLabStatus;

typedef enum CusumLabRegime {
  CUSUM_LAB_REGIME_BELOW_INVERSE_ORDER = 0,
  CUSUM_LAB_REGIME_AT_INVERSE_ORDER = 1,
  CUSUM_LAB_REGIME_BETWEEN_INVERSE_ORDER_AND_HALF = 2,
  CUSUM_LAB_REGIME_AT_HALF = 3,
  CUSUM_LAB_REGIME_ABOVE_HALF = 4,
} CusumLabRegime;

/**
 * Zero-mean Gaussian vector with the lab's dependent covariance.
 */
typedef struct CusumLabSampler CusumLabSampler;

/**
 * Deterministic random stream.
 */
typedef struct CusumLabStream CusumLabStream;

typedef struct CusumLabVerdict {
  bool converges;
  enum CusumLabRegime regime;
  double threshold_theta;
} CusumLabVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread. Valid until the next call
 * into the library from the same thread.
 */
const char *cusum_lab_last_error(void);

/**
 * `clamp(x, −level, level)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CusumLabStatus cusum_lab_truncate(double x, double level, double *out);

/**
 * `E|N(0, variance)|^r`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CusumLabStatus cusum_lab_abs_moment(double r, double variance, double *out);

/**
 * Γ(z) for z in (0, 50].
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CusumLabStatus cusum_lab_gamma(double z, double *out);

/**
 * `floor(n·tau_star)`; fails unless it lies in `1..n`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CusumLabStatus cusum_lab_change_index(size_t n, double tau_star, size_t *out);

/**
 * Mean of the n observations: `mu` before the change, `mu + delta` after.
 *
 * # Safety
 * `out` must point to `out_len` writable doubles.
 */
enum CusumLabStatus cusum_lab_mean_vector(double mu,
                                          double delta,
                                          double tau_star,
                                          size_t n,
                                          double *out,
                                          size_t out_len);

/**
 * CUSUM statistic `U_k` for `k = 1..n−1`, written to `out[k−1]`.
 *
 * # Safety
 * `y` must point to `n` doubles and `out` to `out_len` writable doubles.
 */
enum CusumLabStatus cusum_lab_cusum_profile(const double *y,
                                            size_t n,
                                            double gamma,
                                            double *out,
                                            size_t out_len);

/**
 * Change-point estimate `k̂` (1-based) and `τ̂ = k̂/n`.
 *
 * # Safety
 * `y` must point to `n` doubles; `k_hat` and `tau_hat` must be valid for writes.
 */
enum CusumLabStatus cusum_lab_estimate(const double *y,
                                       size_t n,
                                       double gamma,
                                       size_t *k_hat,
                                       double *tau_hat);

/**
 * Rate-condition verdict for moment order `r`, weight `gamma` and shift
 * exponent `theta`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CusumLabStatus cusum_lab_classify_rate(double r,
                                            double gamma,
                                            double theta,
                                            struct CusumLabVerdict *out);

/**
 * Builds and factors the n×n covariance with parameter `sigma > 1`.
 *
 * # Safety
 * `out` must be valid for writes. Release the handle with
 * `cusum_lab_sampler_free`.
 */
enum CusumLabStatus cusum_lab_sampler_new(size_t n, double sigma, struct CusumLabSampler **out);

/**
 * # Safety
 * `sampler` must come from `cusum_lab_sampler_new` and not be used again.
 * Null is ignored.
 */
void cusum_lab_sampler_free(struct CusumLabSampler *sampler);

/**
 * Dimension of the sampler, or 0 for a null handle.
 *
 * # Safety
 * `sampler` must be null or a live handle.
 */
size_t cusum_lab_sampler_len(const struct CusumLabSampler *sampler);

/**
 * Covariance entry `(i, j)`, 0-based.
 *
 * # Safety
 * `sampler` must be a live handle; `out` must be valid for writes.
 */
enum CusumLabStatus cusum_lab_sampler_covariance(const struct CusumLabSampler *sampler,
                                                 size_t i,
                                                 size_t j,
                                                 double *out);

/**
 * Draws one row from `sampler` using `stream`.
 *
 * # Safety
 * Both handles must be live; `out` must point to `out_len` writable doubles.
 */
enum CusumLabStatus cusum_lab_sampler_draw(const struct CusumLabSampler *sampler,
                                           struct CusumLabStream *stream,
                                           double *out,
                                           size_t out_len);

/**
 * Stream keyed by `(base_seed, gamma_index, theta_index, n, rep)`; the
 * same key always yields the same sequence.
 *
 * # Safety
 * `out` must be valid for writes. Release with `cusum_lab_stream_free`.
 */
enum CusumLabStatus cusum_lab_stream_new(uint64_t base_seed,
                                         uint32_t gamma_index,
                                         uint32_t theta_index,
                                         uint64_t n,
                                         uint64_t rep,
                                         struct CusumLabStream **out);

/**
 * # Safety
 * `stream` must come from `cusum_lab_stream_new` and not be used again.
 * Null is ignored.
 */
void cusum_lab_stream_free(struct CusumLabStream *stream);

/**
 * Next standard normal draw.
 *
 * # Safety
 * `stream` must be a live handle; `out` must be valid for writes.
 */
enum CusumLabStatus cusum_lab_stream_next_normal(struct CusumLabStream *stream, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUSUM_LAB_H */
