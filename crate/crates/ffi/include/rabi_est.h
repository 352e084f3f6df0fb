#ifndef RABI_EST_H
#define RABI_EST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  RABI_STATUS_OK = 0,
  RABI_STATUS_NULL_POINTER = 1,
  RABI_STATUS_INVALID_CONFIG = 2,
  /**
   * Argument or data outside the model's domain.
   */
  RABI_STATUS_DOMAIN = 3,
  /**
   * A numerical procedure failed to converge.
   */
  RABI_STATUS_NUMERICAL = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  RABI_STATUS_PANIC = 5,
} RabiStatus;

typedef enum {
  RABI_ROOT_STATUS_ACCEPTED = 0,
  RABI_ROOT_STATUS_REJECTED_NEGATIVE = 1,
  RABI_ROOT_STATUS_BOUNDARY = 2,
} RabiRootStatus;

typedef enum {
  RABI_AMBIGUITY_UNAMBIGUOUS = 0,
  RABI_AMBIGUITY_AMBIGUOUS = 1,
} RabiAmbiguity;

/**
 * Opaque drive configuration.
 */
typedef struct RabiField RabiField;

/**
 * Opaque prior.
 */
typedef struct RabiPrior RabiPrior;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rabi_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t rabi_last_error_message(char *buf, uintptr_t len);

/**
 * # Safety
 * `out` must be a valid pointer to a `RabiField*`.
 */
RabiStatus rabi_field_new(double omega, double b0, double theta, RabiField **out);

/**
 * # Safety
 * `f` must be null or a handle from [`rabi_field_new`] not yet freed.
 */
void rabi_field_free(RabiField *f);

/**
 * # Safety
 * Pointers must be valid.
 */
RabiStatus rabi_prob_detect(const RabiField *f, double omega0, double *out);

/**
 * # Safety
 * Pointers must be valid.
 */
RabiStatus rabi_cfi(const RabiField *f, double omega0, double *out);

/**
 * # Safety
 * Pointers must be valid.
 */
RabiStatus rabi_qfi(const RabiField *f, double omega0, double *out);

/**
 * Both ML roots for sample mean `xbar`.
 *
 * # Safety
 * `roots` and `statuses` must point to two elements each; `ambiguity` to one.
 */
RabiStatus rabi_ml_estimate(const RabiField *f,
                            double xbar,
                            double *roots,
                            RabiRootStatus *statuses,
                            RabiAmbiguity *ambiguity);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
RabiStatus rabi_prior_uniform(double lower, double upper, RabiPrior **out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
RabiStatus rabi_prior_gaussian(double lower,
                               double upper,
                               double mean,
                               double sigma,
                               RabiPrior **out);

/**
 * # Safety
 * `f` and `out` must be valid pointers.
 */
RabiStatus rabi_prior_jeffreys(const RabiField *f, double lower, double upper, RabiPrior **out);

/**
 * # Safety
 * `p` must be null or a prior handle not yet freed.
 */
void rabi_prior_free(RabiPrior *p);

/**
 * Posterior mean for `k` photons in `n` gates (`k` may be non-integer).
 *
 * # Safety
 * Pointers must be valid.
 */
RabiStatus rabi_mmse(const RabiField *f, const RabiPrior *p, double n, double k, double *out);

/**
 * Highest posterior maximum on a grid of `grid_points` nodes.
 *
 * # Safety
 * Pointers must be valid.
 */
RabiStatus rabi_map(const RabiField *f,
                    const RabiPrior *p,
                    double n,
                    double k,
                    uintptr_t grid_points,
                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RABI_EST_H */
