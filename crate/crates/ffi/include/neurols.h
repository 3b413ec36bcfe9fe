#ifndef NEUROLS_H
#define NEUROLS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum NlsStatus {
  NLS_STATUS_OK = 0,
  NLS_STATUS_NULL_POINTER = 1,
  NLS_STATUS_INVALID_ARGUMENT = 2,
  NLS_STATUS_IO = 3,
  NLS_STATUS_PARSE = 4,
  NLS_STATUS_DIMENSION_MISMATCH = 5,
  NLS_STATUS_PANIC = 6,
} NlsStatus;

// Built-in baseline policies.
typedef enum NlsBaseline {
  NLS_BASELINE_BEST_IMPROVEMENT = 0,
  NLS_BASELINE_FIRST_IMPROVEMENT = 1,
  NLS_BASELINE_ONE_COMMA_LAMBDA = 2,
} NlsBaseline;

// Opaque problem instance.
typedef struct NlsInstance NlsInstance;

// Opaque move-selection policy.
typedef struct NlsPolicy NlsPolicy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *nls_last_error_message(void);

// Generate an NK landscape with `n` bits and `k` epistatic links.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum NlsStatus nls_nk_generate(size_t n, size_t k, uint64_t seed, struct NlsInstance **out);

// Load an instance file (`.json` NK or `.qubo` text).
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum NlsStatus nls_instance_load(const char *path, struct NlsInstance **out);

// # Safety
// `inst` must be a live handle and `path` a NUL-terminated string.
enum NlsStatus nls_instance_save(const struct NlsInstance *inst, const char *path);

// # Safety
// `inst` must be null or a handle not yet freed.
void nls_instance_free(struct NlsInstance *inst);

// Number of bits, or 0 for a null handle.
//
// # Safety
// `inst` must be null or a live handle.
size_t nls_instance_n(const struct NlsInstance *inst);

// Fitness of `bits` (one byte per bit, nonzero = 1).
//
// # Safety
// `bits` must point to `n` readable bytes and `out` must be writable.
enum NlsStatus nls_instance_evaluate(const struct NlsInstance *inst,
                                     const uint8_t *bits,
                                     size_t n,
                                     double *out);

// Writes `Δ_i = f(x) - f(flip_i x)` for every bit into `out[0..n]`.
//
// # Safety
// `bits` must point to `n` readable bytes and `out` to `n` writable doubles.
enum NlsStatus nls_instance_deltas(const struct NlsInstance *inst,
                                   const uint8_t *bits,
                                   size_t n,
                                   double *out);

// Load a trained policy file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum NlsStatus nls_policy_load(const char *path, struct NlsPolicy **out);

// Create a baseline policy; `lambda` is only read for `OneCommaLambda`.
//
// # Safety
// `out` must be writable.
enum NlsStatus nls_policy_baseline(enum NlsBaseline kind, size_t lambda, struct NlsPolicy **out);

// # Safety
// `policy` must be null or a handle not yet freed.
void nls_policy_free(struct NlsPolicy *policy);

// Run `horizon` moves from `x0` and store the best fitness seen in
// `out_best`. When `out_actions` is non-null it receives the `horizon`
// flipped indices.
//
// # Safety
// Handles must be live, `x0` must hold `n` bytes, `out_best` must be
// writable and `out_actions`, when non-null, must hold `horizon` slots.
enum NlsStatus nls_run_trajectory(const struct NlsInstance *inst,
                                  const struct NlsPolicy *policy,
                                  const uint8_t *x0,
                                  size_t n,
                                  size_t horizon,
                                  uint64_t hash_seed,
                                  double *out_best,
                                  size_t *out_actions);

// Welch's t-test of `a` against `b`.
//
// # Safety
// `a` and `b` must hold `na` and `nb` doubles; outputs must be writable.
enum NlsStatus nls_welch_t(const double *a,
                           size_t na,
                           const double *b,
                           size_t nb,
                           double *out_t,
                           double *out_df,
                           double *out_p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEUROLS_H */
