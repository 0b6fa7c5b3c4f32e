#ifndef RIRKIT_H
#define RIRKIT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RirkitStatus {
  RIRKIT_STATUS_OK = 0,
  RIRKIT_STATUS_NULL_POINTER = 1,
  RIRKIT_STATUS_INVALID_INPUT = 2,
  RIRKIT_STATUS_PRECONDITION = 3,
  RIRKIT_STATUS_VERIFICATION = 4,
  RIRKIT_STATUS_PANIC = 5,
} RirkitStatus;

typedef enum RirkitVerdictStatus {
  RIRKIT_VERDICT_STATUS_EXACT_SUFFICIENT = 0,
  RIRKIT_VERDICT_STATUS_EXACT_BOUNDARY = 1,
  RIRKIT_VERDICT_STATUS_NOT_EXACT = 2,
  RIRKIT_VERDICT_STATUS_STRICTLY_GREATER = 3,
  RIRKIT_VERDICT_STATUS_INCONCLUSIVE = 4,
} RirkitVerdictStatus;

typedef enum RirkitClass {
  RIRKIT_CLASS_G1_BOUNDARY = 0,
  RIRKIT_CLASS_G2_INTERIOR = 1,
  RIRKIT_CLASS_G1_INTERIOR = 2,
  RIRKIT_CLASS_GN_OTHER = 3,
} RirkitClass;

/**
 * Opaque transfer function handle.
 */
typedef struct RirkitTf RirkitTf;

typedef struct RirkitVerdict {
  enum RirkitVerdictStatus status;
  enum RirkitClass class_name;
  size_t n_unstable;
  double peak_omega;
  double peak_gain;
  /**
   * Principal phase at the peak.
   */
  double theta_p;
  double theta_rate;
  double rho_threshold;
  double lower_bound;
} RirkitVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rirkit_version(void);

/**
 * Message for the last failed call on this thread, or null. Valid until the next call.
 */
const char *rirkit_last_error_message(void);

/**
 * Builds a transfer function from descending-power coefficients.
 *
 * # Safety
 * `num` and `den` must point to `num_len` and `den_len` readable doubles; `out` must be writable.
 */
enum RirkitStatus rirkit_tf_new(const double *num,
                                size_t num_len,
                                const double *den,
                                size_t den_len,
                                struct RirkitTf **out);

/**
 * # Safety
 * `tf` must be null or a handle from this library that has not been freed.
 */
void rirkit_tf_free(struct RirkitTf *tf);

/**
 * Evaluates the transfer function at the complex point `re + j·im`.
 *
 * # Safety
 * `tf` must be a live handle; `out_re` and `out_im` must be writable.
 */
enum RirkitStatus rirkit_tf_eval(const struct RirkitTf *tf,
                                 double re,
                                 double im,
                                 double *out_re,
                                 double *out_im);

/**
 * Peak gain over the unit circle and the frequency in [0, π] where it occurs.
 *
 * # Safety
 * `tf` must be a live handle; `out_norm` and `out_omega` must be writable.
 */
enum RirkitStatus rirkit_tf_linf_norm(const struct RirkitTf *tf,
                                      double *out_norm,
                                      double *out_omega);

/**
 * Writes up to `capacity` poles outside the unit disk and stores the total count in `out_count`.
 * Pass `capacity = 0` with null buffers to query the count.
 *
 * # Safety
 * `tf` must be a live handle; the buffers must hold `capacity` doubles; `out_count` must be writable.
 */
enum RirkitStatus rirkit_tf_unstable_poles(const struct RirkitTf *tf,
                                           double *out_re,
                                           double *out_im,
                                           size_t capacity,
                                           size_t *out_count);

/**
 * Robust instability radius verdict for an unstable plant.
 *
 * # Safety
 * `tf` must be a live handle; `out` must be writable.
 */
enum RirkitStatus rirkit_analyze(const struct RirkitTf *tf, struct RirkitVerdict *out);

/**
 * Same verdict as [`rirkit_analyze`] serialized as JSON. Free the string with [`rirkit_string_free`].
 *
 * # Safety
 * `tf` must be a live handle; `out` must be writable.
 */
enum RirkitStatus rirkit_analyze_json(const struct RirkitTf *tf,
                                      char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library that has not been freed.
 */
void rirkit_string_free(char *s);

/**
 * Stable perturbation of minimal peak gain that drives the loop onto the unit circle.
 * The new handle goes to `out_f`; its peak gain to `out_norm` when non-null.
 *
 * # Safety
 * `tf` must be a live handle; `out_f` must be writable; `out_norm` may be null.
 */
enum RirkitStatus rirkit_synthesize(const struct RirkitTf *tf,
                                    struct RirkitTf **out_f,
                                    double *out_norm);

/**
 * Randomized search for the largest all-pass phase rate at `omega_p` given phase `theta_p`.
 *
 * # Safety
 * `out_best` and `out_bound` must be writable.
 */
enum RirkitStatus rirkit_pcr_max_search(double omega_p,
                                        double theta_p,
                                        size_t max_order,
                                        size_t trials,
                                        uint64_t seed,
                                        double *out_best,
                                        double *out_bound);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIRKIT_H */
