#ifndef RANKPRUNE_H
#define RANKPRUNE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for all fallible calls.
 */
typedef enum {
  RP_STATUS_OK = 0,
  RP_STATUS_NULL_POINTER = 1,
  RP_STATUS_INVALID_INPUT = 2,
  RP_STATUS_DEGENERATE_ESTIMATE = 3,
  RP_STATUS_INFEASIBLE_CONFIG = 4,
  RP_STATUS_PANIC = 5,
} RpStatus;

/**
 * Opaque dataset handle.
 */
typedef struct RpDataset RpDataset;

/**
 * Opaque trained-model handle carrying the estimated noise rates.
 */
typedef struct RpModel RpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Pointer to the last error message on this thread, or null if none.
 * Valid until the next failing call on the same thread.
 */
const char *rp_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer previously returned by this library.
 */
void rp_string_free(char *s);

/**
 * Builds a dataset from row-major features and 0/1 observed labels.
 *
 * # Safety
 * `features` must point to `n * m` doubles, `labels` to `n` bytes, and
 * `out` must be a valid pointer.
 */
RpStatus rp_dataset_new(const double *features,
                        uintptr_t n,
                        uintptr_t m,
                        const uint8_t *labels,
                        RpDataset **out);

/**
 * Loads a dataset from a CSV file with header `f0,...,f{m-1},s[,y]`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
RpStatus rp_dataset_from_csv(const char *path, RpDataset **out);

/**
 * Number of examples in the dataset; 0 for a null handle.
 *
 * # Safety
 * `d` must be null or a live dataset handle.
 */
uintptr_t rp_dataset_len(const RpDataset *d);

/**
 * Feature dimension of the dataset; 0 for a null handle.
 *
 * # Safety
 * `d` must be null or a live dataset handle.
 */
uintptr_t rp_dataset_dim(const RpDataset *d);

/**
 * Releases a dataset handle.
 *
 * # Safety
 * `d` must be null or a pointer returned by a dataset constructor.
 */
void rp_dataset_free(RpDataset *d);

/**
 * Estimates noise rates, prunes, and fits a reweighted model.
 *
 * # Safety
 * `d` must be a live dataset handle and `out` a valid pointer.
 */
RpStatus rp_fit(const RpDataset *d, uintptr_t cv_k, uint64_t seed, RpModel **out);

/**
 * Like `rp_fit` but uses the caller's known noise rates instead of
 * estimating them.
 *
 * # Safety
 * `d` must be a live dataset handle and `out` a valid pointer.
 */
RpStatus rp_fit_known_rates(const RpDataset *d,
                            double rho1,
                            double rho0,
                            uintptr_t cv_k,
                            uint64_t seed,
                            RpModel **out);

/**
 * Copies the model's noise rates into the non-null out-pointers.
 *
 * # Safety
 * `m` must be a live model handle; out-pointers may be null to skip.
 */
RpStatus rp_model_rates(const RpModel *m, double *rho1, double *rho0, double *pi1, double *pi0);

/**
 * Predicted probability that the true label is 1 for one feature row.
 *
 * # Safety
 * `features` must point to `m_len` doubles matching the model's input
 * dimension; `out` must be valid.
 */
RpStatus rp_model_predict(const RpModel *m, const double *features, uintptr_t m_len, double *out);

/**
 * Serializes the model to a JSON string owned by the caller.
 *
 * # Safety
 * `m` must be a live model handle and `out` a valid pointer.
 */
RpStatus rp_model_to_json(const RpModel *m, char **out);

/**
 * Releases a model handle.
 *
 * # Safety
 * `m` must be null or a pointer returned by a fit call.
 */
void rp_model_free(RpModel *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANKPRUNE_H */
