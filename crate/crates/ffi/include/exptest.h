#ifndef EXPTEST_H
#define EXPTEST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ExptestStatus {
  EXPTEST_STATUS_OK = 0,
  EXPTEST_STATUS_NULL_POINTER = 1,
  EXPTEST_STATUS_INVALID_INPUT = 2,
  EXPTEST_STATUS_NUMERIC_FAILURE = 3,
  EXPTEST_STATUS_PANIC = 4,
} ExptestStatus;

/**
 * Simulated null statistics at one `(n, a)`.
 */
typedef struct ExptestNullDistribution ExptestNullDistribution;

/**
 * A validated sample with its difference table prepared.
 */
typedef struct ExptestSample ExptestSample;

/**
 * Result of [`exptest_test`].
 */
typedef struct ExptestOutcome {
  double statistic;
  double a;
  size_t n;
  double alpha;
  double critical_value;
  double p_value;
  bool reject;
  size_t replicates;
  uint64_t seed;
} ExptestOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *exptest_last_error(void);

/**
 * Copies `len` values into a new sample handle.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum ExptestStatus exptest_sample_new(const double *values, size_t len, struct ExptestSample **out);

/**
 * # Safety
 * `sample` must come from [`exptest_sample_new`] and not be freed twice.
 */
void exptest_sample_free(struct ExptestSample *sample);

/**
 * Number of observations, or 0 for a null handle.
 *
 * # Safety
 * `sample` must be null or a live handle.
 */
size_t exptest_sample_len(const struct ExptestSample *sample);

/**
 * The statistic `M_{n,a}` of the sample.
 *
 * # Safety
 * `sample` must be a live handle; `out` must be writable.
 */
enum ExptestStatus exptest_statistic(const struct ExptestSample *sample, double a, double *out);

/**
 * Simulates `replicates` null statistics for samples of size `n`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ExptestStatus exptest_null_simulate(size_t n,
                                         double a,
                                         size_t replicates,
                                         uint64_t seed,
                                         struct ExptestNullDistribution **out);

/**
 * # Safety
 * `dist` must come from [`exptest_null_simulate`] and not be freed twice.
 */
void exptest_null_free(struct ExptestNullDistribution *dist);

/**
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum ExptestStatus exptest_null_critical_value(const struct ExptestNullDistribution *dist,
                                               double alpha,
                                               double *out);

/**
 * # Safety
 * `dist` must be a live handle; `out` must be writable.
 */
enum ExptestStatus exptest_null_p_value(const struct ExptestNullDistribution *dist,
                                        double statistic,
                                        double *out);

/**
 * Tests the sample at tuning `a` against a simulated null distribution.
 *
 * # Safety
 * `sample` must be a live handle; `out` must be writable.
 */
enum ExptestStatus exptest_test(const struct ExptestSample *sample,
                                double a,
                                double alpha,
                                size_t replicates,
                                uint64_t seed,
                                struct ExptestOutcome *out);

/**
 * Largest eigenvalue of the limiting operator on an `m`-point grid over
 * `[0, truncation]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ExptestStatus exptest_delta1(double a, size_t m, double truncation, double *out);

/**
 * Exponential integral `Ei(x)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ExptestStatus exptest_expi(double x, double *out);

/**
 * Second projection `h̃₂(x, y, a)` of the kernel.
 *
 * # Safety
 * `out` must be writable.
 */
enum ExptestStatus exptest_h2_tilde(double x, double y, double a, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EXPTEST_H */
