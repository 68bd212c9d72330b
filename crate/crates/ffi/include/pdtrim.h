#ifndef PDTRIM_H
#define PDTRIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call.
 */
typedef enum PdtrimStatus {
  PDTRIM_STATUS_OK = 0,
  /**
   * An argument is outside the domain of the operation.
   */
  PDTRIM_STATUS_DOMAIN = 1,
  /**
   * Too few jumps were enumerated for the request.
   */
  PDTRIM_STATUS_INSUFFICIENT_ENUMERATION = 2,
  /**
   * A density was evaluated outside its validated range.
   */
  PDTRIM_STATUS_RANGE = 3,
  /**
   * A numerical method did not meet its tolerance.
   */
  PDTRIM_STATUS_NUMERIC = 4,
  /**
   * An internal consistency check failed.
   */
  PDTRIM_STATUS_CONSISTENCY = 5,
  /**
   * The fitter could not fit the data.
   */
  PDTRIM_STATUS_FIT_FAILURE = 6,
  /**
   * A required pointer argument was null.
   */
  PDTRIM_STATUS_NULL_POINTER = 7,
  /**
   * A string argument was not valid UTF-8.
   */
  PDTRIM_STATUS_INVALID_STRING = 8,
  /**
   * The library panicked; this is a bug.
   */
  PDTRIM_STATUS_PANIC = 9,
} PdtrimStatus;

/**
 * The densities `g_r, …, g_{r+count-1}` of the trimmed total.
 */
typedef struct PdtrimDensity PdtrimDensity;

/**
 * Seeded random stream.
 */
typedef struct PdtrimRng PdtrimRng;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *pdtrim_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pdtrim_version(void);

/**
 * A stream derived from `seed`; free with [`pdtrim_rng_free`].
 */
struct PdtrimRng *pdtrim_rng_new(uint64_t seed);

/**
 * # Safety
 * `rng` must come from [`pdtrim_rng_new`] and not have been freed.
 */
void pdtrim_rng_free(struct PdtrimRng *rng);

/**
 * Writes one `PD_α^{(r)}` draw: `depth` values into `values` and the
 * remaining mass into `tail_fraction`. Jumps are enumerated down to `eps`
 * times the `r`-th largest.
 *
 * # Safety
 * `rng` must be a live handle; `values` must hold `depth` doubles.
 */
enum PdtrimStatus pdtrim_sample_pd(struct PdtrimRng *rng,
                                   double alpha,
                                   size_t r,
                                   size_t depth,
                                   double eps,
                                   double *values,
                                   double *tail_fraction);

/**
 * Writes the `n_points` largest jumps on `[0, t]` of the subordinator with
 * Lévy tail `c x^{-α}`, in decreasing order.
 *
 * # Safety
 * `rng` must be a live handle; `jumps` must hold `n_points` doubles.
 */
enum PdtrimStatus pdtrim_sample_jumps(struct PdtrimRng *rng,
                                      double alpha,
                                      double c,
                                      double t,
                                      size_t n_points,
                                      double *jumps);

/**
 * Builds and self-checks the density family.
 *
 * # Safety
 * `handle` must be valid for one pointer write.
 */
enum PdtrimStatus pdtrim_density_new(double alpha,
                                     double r,
                                     size_t count,
                                     struct PdtrimDensity **handle);

/**
 * # Safety
 * `handle` must come from [`pdtrim_density_new`] and not have been freed.
 */
void pdtrim_density_free(struct PdtrimDensity *handle);

/**
 * `g_{r+k}(t)`; [`PdtrimStatus::Range`] outside the validated range.
 *
 * # Safety
 * `handle` must be live; `value` valid for one write.
 */
enum PdtrimStatus pdtrim_density_eval(const struct PdtrimDensity *handle,
                                      size_t k,
                                      double t,
                                      double *value);

/**
 * Validated range `(t_min, t_max)` of `g_{r+k}`.
 *
 * # Safety
 * `handle` must be live; `t_min` and `t_max` valid for one write each.
 */
enum PdtrimStatus pdtrim_density_range(const struct PdtrimDensity *handle,
                                       size_t k,
                                       double *t_min,
                                       double *t_max);

/**
 * `K_n(α)`.
 *
 * # Safety
 * `value` must be valid for one write.
 */
enum PdtrimStatus pdtrim_k_n(double alpha, size_t n, double *value);

/**
 * `(1 + ψ̃(λ))^{-r}`, the Laplace transform of the trimmed total.
 *
 * # Safety
 * `value` must be valid for one write.
 */
enum PdtrimStatus pdtrim_laplace_ratio(double alpha, double r, double lambda, double *value);

/**
 * Fit of `(α, r)` to `len` positive weights in any order. A negative or NaN
 * `penalty` selects the default.
 *
 * # Safety
 * `weights` must hold `len` doubles; the outputs must be valid for one write.
 */
enum PdtrimStatus pdtrim_fit(const double *weights,
                             size_t len,
                             size_t r_max,
                             double penalty,
                             size_t *r_hat,
                             double *alpha_hat,
                             double *residual);

/**
 * Runs the verification suite `suite` (a suite name or `"all"`) on the
 * default grid and writes the JSON report array to `json`, to be released
 * with [`pdtrim_string_free`]. `all_pass` receives 1 when every check passes.
 *
 * # Safety
 * `suite` must be a NUL-terminated string; `json` and `all_pass` valid for
 * one write each.
 */
enum PdtrimStatus pdtrim_verify(const char *suite,
                                uint64_t seed,
                                size_t budget,
                                char **json,
                                int32_t *all_pass);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void pdtrim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDTRIM_H */
