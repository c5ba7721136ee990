#ifndef FINSLER_H
#define FINSLER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FinslerStatus {
  FINSLER_STATUS_OK = 0,
  FINSLER_STATUS_NULL_POINTER = 1,
  FINSLER_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad spec, expression, dimension or argument.
   */
  FINSLER_STATUS_INVALID_INPUT = 3,
  /**
   * Singular matrices, non-convergence, loss of positive-definiteness.
   */
  FINSLER_STATUS_NUMERICAL = 4,
  FINSLER_STATUS_BUFFER_TOO_SMALL = 5,
  FINSLER_STATUS_PANIC = 6,
} FinslerStatus;

/**
 * Opaque handle to a validated metric.
 */
typedef struct FinslerMetricHandle FinslerMetricHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *finsler_version(void);

/**
 * Message of the last failure on this thread, or NULL. Valid until the next failing call.
 */
const char *finsler_last_error(void);

/**
 * Parses and validates a metric spec.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 * The handle written to `out` must be released with [`finsler_metric_free`].
 */
enum FinslerStatus finsler_metric_from_json(const char *json, struct FinslerMetricHandle **out);

/**
 * Releases a metric handle. NULL is ignored.
 *
 * # Safety
 * `handle` must come from [`finsler_metric_from_json`] and not be used afterwards.
 */
void finsler_metric_free(struct FinslerMetricHandle *handle);

/**
 * Dimension of the metric, or 0 for NULL.
 *
 * # Safety
 * `handle` must be NULL or a live handle.
 */
size_t finsler_metric_dimension(const struct FinslerMetricHandle *handle);

/**
 * `F(x, y)`.
 *
 * # Safety
 * `x` and `y` must point to `n` doubles; `out` must be writable.
 */
enum FinslerStatus finsler_metric_f(const struct FinslerMetricHandle *handle,
                                    const double *x,
                                    const double *y,
                                    size_t n,
                                    double *out);

/**
 * `g_ij` row-major into `out` (`n²` slots).
 *
 * # Safety
 * `x`, `y` must point to `n` doubles and `out` to `out_len` writable doubles.
 */
enum FinslerStatus finsler_fundamental_tensor(const struct FinslerMetricHandle *handle,
                                              const double *x,
                                              const double *y,
                                              size_t n,
                                              double *out,
                                              size_t out_len);

/**
 * `A_ijk` into `out` (`n³` slots).
 *
 * # Safety
 * As [`finsler_fundamental_tensor`].
 */
enum FinslerStatus finsler_cartan_tensor(const struct FinslerMetricHandle *handle,
                                         const double *x,
                                         const double *y,
                                         size_t n,
                                         double *out,
                                         size_t out_len);

/**
 * Chern coefficients `Γ^i_jk` at `[i][j][k]` into `out` (`n³` slots).
 *
 * # Safety
 * As [`finsler_fundamental_tensor`].
 */
enum FinslerStatus finsler_chern_coefficients(const struct FinslerMetricHandle *handle,
                                              const double *x,
                                              const double *y,
                                              size_t n,
                                              double *out,
                                              size_t out_len);

/**
 * Landsberg tensor `Ȧ_ijk` into `out` (`n³` slots).
 *
 * # Safety
 * As [`finsler_fundamental_tensor`].
 */
enum FinslerStatus finsler_landsberg_tensor(const struct FinslerMetricHandle *handle,
                                            const double *x,
                                            const double *y,
                                            size_t n,
                                            double *out,
                                            size_t out_len);

/**
 * `vol(I_x)` on a sphere grid of the given resolution.
 *
 * # Safety
 * `x` must point to `n` doubles; `out` must be writable.
 */
enum FinslerStatus finsler_indicatrix_volume(const struct FinslerMetricHandle *handle,
                                             const double *x,
                                             size_t n,
                                             size_t resolution,
                                             double *out);

/**
 * Averaged metric `h_ij(x)` into `out` (`n²` slots). `measure` may be NULL for the spec's measure.
 *
 * # Safety
 * `measure` must be NULL or NUL-terminated; `x` must point to `n` doubles and
 * `out` to `out_len` writable doubles.
 */
enum FinslerStatus finsler_averaged_metric(const struct FinslerMetricHandle *handle,
                                           const char *measure,
                                           const double *x,
                                           size_t n,
                                           size_t resolution,
                                           double *out,
                                           size_t out_len);

/**
 * Full analysis report as JSON. The string written to `out` must be released
 * with [`finsler_string_free`].
 *
 * # Safety
 * `x`, `y` must point to `n` doubles; `out` must be writable.
 */
enum FinslerStatus finsler_analyze_json(const struct FinslerMetricHandle *handle,
                                        const double *x,
                                        const double *y,
                                        size_t n,
                                        double tolerance,
                                        char **out);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void finsler_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FINSLER_H */
