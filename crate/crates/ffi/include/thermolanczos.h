#ifndef THERMOLANCZOS_H
#define THERMOLANCZOS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_ARGUMENT = 2,
  TL_STATUS_INVALID_MODEL = 3,
  TL_STATUS_DOMAIN = 4,
  TL_STATUS_CONVERGENCE = 5,
  TL_STATUS_NUMERICAL = 6,
  TL_STATUS_NON_INTEGRABLE = 7,
  TL_STATUS_PARSE = 8,
  TL_STATUS_PANIC = 9,
} TlStatus;

/**
 * A solved Lanczos curve.
 */
typedef struct TlCurve TlCurve;

/**
 * A cumulant model.
 */
typedef struct TlModel TlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tl_version(void);

/**
 * Message of the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *tl_last_error_message(void);

/**
 * Gaussian model with cumulants `c1`, `c2`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TlStatus tl_model_gaussian(double c1, double c2, struct TlModel **out);

/**
 * Isotropic XY chain.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TlStatus tl_model_xy(struct TlModel **out);

/**
 * Ising chain in a transverse field of strength `x`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TlStatus tl_model_itf(double x, struct TlModel **out);

/**
 * Model from a JSON spec `{"kind": ..., "params": {...}}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TlStatus tl_model_from_json(const char *json, struct TlModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle from a `tl_model_*` constructor not yet freed.
 */
void tl_model_free(struct TlModel *model);

/**
 * Per-site cumulants `c_1..c_k` into `out[0..k]`.
 *
 * # Safety
 * `model` must be a live handle and `out` must hold `k` doubles.
 */
enum TlStatus tl_model_cumulants(const struct TlModel *model, size_t k, double *out);

/**
 * `α(s)` and `β²(s)` at one point with default solver settings.
 *
 * # Safety
 * `model` must be a live handle; `alpha` and `beta2` valid pointers.
 */
enum TlStatus tl_solve_point(const struct TlModel *model, double s, double *alpha, double *beta2);

/**
 * Solve along an increasing grid `s[0..n]`. A solve that stops early
 * still returns the curve of the points reached; see [`tl_curve_stopped`].
 *
 * # Safety
 * `model` must be a live handle, `s` must hold `n` doubles, `out` valid.
 */
enum TlStatus tl_solve_curve(const struct TlModel *model,
                             const double *s,
                             size_t n,
                             struct TlCurve **out);

/**
 * Number of solved points.
 *
 * # Safety
 * `curve` must be a live handle.
 */
enum TlStatus tl_curve_len(const struct TlCurve *curve, size_t *len);

/**
 * Point `i` of the curve.
 *
 * # Safety
 * `curve` must be a live handle; the out-pointers valid.
 */
enum TlStatus tl_curve_get(const struct TlCurve *curve,
                           size_t i,
                           double *s,
                           double *alpha,
                           double *beta2);

/**
 * Status of the failure that ended the solve early, `Ok` if it reached
 * the end of the grid; the message goes to [`tl_last_error_message`].
 *
 * # Safety
 * `curve` must be a live handle.
 */
enum TlStatus tl_curve_stopped(const struct TlCurve *curve);

/**
 * Ground-state energy density estimate from the lower envelope.
 *
 * # Safety
 * `curve` must be a live handle and `eps0` valid.
 */
enum TlStatus tl_curve_ground_energy(const struct TlCurve *curve, double *eps0);

/**
 * # Safety
 * `curve` must be NULL or a handle from [`tl_solve_curve`] not yet freed.
 */
void tl_curve_free(struct TlCurve *curve);

/**
 * Taylor coefficients `a_0..a_{n_max}`, `b_0..b_{n_max}` of `α(s) − c₁`
 * and `β²(s)` in powers `s^{n+1}`.
 *
 * # Safety
 * `model` must be a live handle; `a` and `b` must hold `n_max + 1` doubles.
 */
enum TlStatus tl_series(const struct TlModel *model, size_t n_max, double *a, double *b);

/**
 * Per-site logarithm of the ground-state overlap.
 *
 * # Safety
 * `model` must be a live handle and `out` valid.
 */
enum TlStatus tl_overlap(const struct TlModel *model, double *out);

/**
 * Continued fraction `R(ε)` of depth `n` for real `ε` off the support.
 *
 * # Safety
 * `alpha` and `beta2` must hold `n` doubles (`beta2[0]` is the total mass).
 */
enum TlStatus tl_continued_fraction(const double *alpha,
                                    const double *beta2,
                                    size_t n,
                                    double eps,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOLANCZOS_H */
