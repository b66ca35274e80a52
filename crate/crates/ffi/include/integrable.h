/* C interface of the integrable verification toolkit. */

#ifndef INTEGRABLE_H
#define INTEGRABLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Classification of a polynomial level against the integral-map image.
 */
enum IntegrableImageClass
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  IntegrableImageClass_InteriorDiffeo = 0,
  IntegrableImageClass_Boundary = 1,
  IntegrableImageClass_NontrivialMaslov = 2,
  IntegrableImageClass_Outside = 3,
};
#ifndef __cplusplus
typedef int32_t IntegrableImageClass;
#endif // __cplusplus

/**
 * Status code of every fallible call.
 */
enum IntegrableStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  IntegrableStatus_Ok = 0,
  /**
   * A pointer argument was null.
   */
  IntegrableStatus_NullPointer = 1,
  /**
   * Arguments failed validation.
   */
  IntegrableStatus_InvalidArgument = 2,
  /**
   * A numerical degeneracy or singularity was hit.
   */
  IntegrableStatus_Numerical = 3,
};
#ifndef __cplusplus
typedef int32_t IntegrableStatus;
#endif // __cplusplus

/**
 * Opaque handle of a separated model-metric pair on the n-torus.
 */
typedef struct IntegrableMetrics IntegrableMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the most recent error on this thread into `buf`
 * (NUL-terminated, truncated to `len`); returns the full message length.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null (then only the
 * length is returned).
 */
size_t integrable_last_error_message(char *buf, size_t len);

/**
 * 1 when the quartet satisfies the six freeness gcd conditions, else 0.
 */
int32_t integrable_eschenburg_admissible(int64_t k, int64_t l, int64_t p, int64_t q);

/**
 * 1 when (k, l) satisfies the maximal-smooth-structure hypothesis, else 0.
 */
int32_t integrable_wks_hypothesis(int64_t k, int64_t l);

/**
 * Homeomorphism congruence against the (1, 4) space; `out` receives 0 or 1.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
IntegrableStatus integrable_wks14_homeomorphic(int64_t k, int64_t l, int32_t *out);

/**
 * Diffeomorphism congruence against the (1, 4) space; `out` receives 0 or 1.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
IntegrableStatus integrable_wks14_diffeomorphic(int64_t k, int64_t l, int32_t *out);

/**
 * Verifies the embedded 28-row reference table; `admissible_rows` receives
 * the number of rows passing the gcd conditions.
 *
 * # Safety
 * `admissible_rows` must be a valid pointer.
 */
IntegrableStatus integrable_table_verify(uint32_t *admissible_rows);

/**
 * Winding index of the canonical generator loop traversed `turns` times.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
IntegrableStatus integrable_canonical_maslov_index(size_t n,
                                                   size_t samples,
                                                   int64_t turns,
                                                   int64_t *out);

/**
 * Winding index of a sampled loop of unitary frames. `frames` holds
 * `n_samples` row-major n x n complex matrices as interleaved re/im pairs,
 * 2 n^2 doubles per sample; the first and last sample must span the same
 * plane.
 *
 * # Safety
 * `frames` must point to `n_samples * 2 * n * n` doubles and `out` must be
 * a valid pointer.
 */
IntegrableStatus integrable_maslov_index_from_frames(size_t n,
                                                     size_t n_samples,
                                                     const double *frames,
                                                     int64_t *out);

/**
 * Builds a metric pair from per-coordinate eigenfunctions
 * constant_i + amplitude_i * sin(2 pi harmonic_i s). Returns null on
 * validation failure (separation or positivity).
 *
 * # Safety
 * The three arrays must each hold `n` entries.
 */
IntegrableMetrics *integrable_metrics_new(size_t n,
                                          const double *constants,
                                          const double *amplitudes,
                                          const size_t *harmonics);

/**
 * Releases a metric handle; a null pointer is ignored.
 *
 * # Safety
 * `m` must come from `integrable_metrics_new` and not be freed twice.
 */
void integrable_metrics_free(IntegrableMetrics *m);

/**
 * Evaluates the momentum-form integral J_tau at (x, y), both of length n.
 *
 * # Safety
 * `m` must be a live handle; `x`, `y` must hold n doubles; `out` valid.
 */
IntegrableStatus integrable_metrics_integral(const IntegrableMetrics *m,
                                             const double *x,
                                             const double *y,
                                             double tau,
                                             double *out);

/**
 * Classifies the polynomial with the given leading coefficient and real
 * roots (length n - 1).
 *
 * # Safety
 * `m` must be a live handle; `roots` must hold `n_roots` doubles; `out`
 * must be valid.
 */
IntegrableStatus integrable_metrics_classify(const IntegrableMetrics *m,
                                             double leading,
                                             const double *roots,
                                             size_t n_roots,
                                             IntegrableImageClass *out);

/**
 * Maslov index of the lifted coordinate loop on the level torus of the
 * polynomial (leading, roots).
 *
 * # Safety
 * Pointer arguments as in `integrable_metrics_classify`.
 */
IntegrableStatus integrable_metrics_loop_index(const IntegrableMetrics *m,
                                               double leading,
                                               const double *roots,
                                               size_t n_roots,
                                               size_t coordinate,
                                               size_t samples,
                                               int64_t *out);

/**
 * Max pairwise Poisson bracket of `n_taus` probe integrals over `states`
 * seeded random phase points.
 *
 * # Safety
 * `m` must be a live handle; `taus` must hold `n_taus` doubles; `out` valid.
 */
IntegrableStatus integrable_metrics_involution_max(const IntegrableMetrics *m,
                                                   const double *taus,
                                                   size_t n_taus,
                                                   size_t states,
                                                   uint64_t seed,
                                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INTEGRABLE_H */
