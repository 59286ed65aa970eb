#ifndef BROWNSCOPE_H
#define BROWNSCOPE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BsStatus {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON, bad parameters, or an unsupported request.
   */
  BS_STATUS_INVALID_INPUT = 3,
  BS_STATUS_EVALUATION_ON_SUPPORT = 4,
  BS_STATUS_WRONG_SUPPORT_KIND = 5,
  /**
   * The point is not strictly outside the closed domain.
   */
  BS_STATUS_INSIDE_DOMAIN = 6,
  BS_STATUS_NUMERICAL = 7,
  BS_STATUS_BUFFER_TOO_SMALL = 8,
  BS_STATUS_PANIC = 9,
} BsStatus;

/**
 * Which lifetime function `bs_lifetime_grid` evaluates.
 */
typedef enum BsModel {
  BS_MODEL_ADDITIVE = 0,
  BS_MODEL_MULT_UNITARY = 1,
  BS_MODEL_MULT_POSITIVE = 2,
} BsModel;

/**
 * Opaque spectral measure.
 */
typedef struct BsMeasure BsMeasure;

typedef struct BsComplex {
  double re;
  double im;
} BsComplex;

typedef struct BsAnnulus {
  double inner_radius;
  double outer_radius;
} BsAnnulus;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a measure document (`{"kind": "atomic", "support": ..., "atoms": ...}`
 * or a density grid) and return a new handle in `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` valid for writes.
 */
enum BsStatus bs_measure_from_json(const char *json, struct BsMeasure **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `m` must come from `bs_measure_from_json` and not be used afterwards.
 */
void bs_measure_free(struct BsMeasure *m);

/**
 * `G(z) = ∫ 1/(z − ξ) dμ(ξ)`.
 *
 * # Safety
 * `m` must be a live handle and `out` valid for writes.
 */
enum BsStatus bs_cauchy_transform(const struct BsMeasure *m,
                                  struct BsComplex z,
                                  struct BsComplex *out);

/**
 * `J(λ) = ½ − λ G(λ)`.
 *
 * # Safety
 * `m` must be a live handle and `out` valid for writes.
 */
enum BsStatus bs_herglotz(const struct BsMeasure *m,
                          struct BsComplex lambda,
                          struct BsComplex *out);

/**
 * `∫ |ξ − λ|⁻² dμ(ξ)`; `+inf` when divergent.
 *
 * # Safety
 * `m` must be a live handle and `out` valid for writes.
 */
enum BsStatus bs_neg2_trace(const struct BsMeasure *m, struct BsComplex lambda, double *out);

/**
 * Lifetime `T(λ)` of the chosen model.
 *
 * # Safety
 * `m` must be a live handle and `out` valid for writes.
 */
enum BsStatus bs_lifetime(const struct BsMeasure *m,
                          enum BsModel model,
                          struct BsComplex lambda,
                          double *out);

/**
 * Lifetime at the `nx × ny` cell centers of `[re_min, re_max] × [im_min, im_max]`,
 * row-major with row 0 at the smallest imaginary part. Points where the
 * lifetime is undefined (the origin in the positive case) get NaN.
 *
 * # Safety
 * `m` must be a live handle and `values` valid for `len` writes.
 */
enum BsStatus bs_lifetime_grid(const struct BsMeasure *m,
                               enum BsModel model,
                               double re_min,
                               double re_max,
                               double im_min,
                               double im_max,
                               size_t nx,
                               size_t ny,
                               double *values,
                               size_t len);

/**
 * `Φ_{t,γ}(λ) = λ + γ G(λ)` for `λ` strictly outside the closed domain.
 *
 * # Safety
 * `m` must be a live handle and `out` valid for writes.
 */
enum BsStatus bs_phi_map(const struct BsMeasure *m,
                         double t,
                         struct BsComplex gamma,
                         struct BsComplex lambda,
                         struct BsComplex *out);

/**
 * `Ψ_{t,γ}(λ) = λ exp(γ J(λ))` for a law on the unit circle.
 *
 * # Safety
 * `m` must be a live handle and `out` valid for writes.
 */
enum BsStatus bs_psi_map(const struct BsMeasure *m,
                         double t,
                         struct BsComplex gamma,
                         struct BsComplex lambda,
                         struct BsComplex *out);

/**
 * Inner and outer radius of the annulus for a law on the half-line.
 *
 * # Safety
 * `m` must be a live handle and `out` valid for writes.
 */
enum BsStatus bs_hl_radii(const struct BsMeasure *m, struct BsAnnulus *out);

/**
 * Inner radius after adding circular noise of variance `t`.
 *
 * # Safety
 * `m` must be a live handle and `out` valid for writes.
 */
enum BsStatus bs_circ_inner_radius(const struct BsMeasure *m, double t, double *out);

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to fit). Returns the buffer size needed for the full message.
 *
 * # Safety
 * `buf` must be valid for `len` writes, or null with `len == 0`.
 */
size_t bs_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BROWNSCOPE_H */
