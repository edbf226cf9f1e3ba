#ifndef FAIRMIX_H
#define FAIRMIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FmStatus {
  FM_STATUS_OK = 0,
  FM_STATUS_NULL_POINTER = 1,
  FM_STATUS_INVALID_ARGUMENT = 2,
  FM_STATUS_IO = 3,
  FM_STATUS_PARSE = 4,
  FM_STATUS_INFEASIBLE = 5,
  FM_STATUS_UNBOUNDED = 6,
  FM_STATUS_BUFFER_TOO_SMALL = 7,
  FM_STATUS_UNDEFINED = 8,
  FM_STATUS_PANIC = 9,
} FmStatus;

enum FmMetric
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  FM_METRIC_ACCEPTANCE_RATE = 0,
  FM_METRIC_TPR = 1,
  FM_METRIC_TNR = 2,
  FM_METRIC_PPV = 3,
  FM_METRIC_NPV = 4,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum FmMetric FmMetric;
#else
typedef uint32_t FmMetric;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque list of classifiers.
 */
typedef struct FmClassifiers FmClassifiers;

/**
 * Opaque dataset handle.
 */
typedef struct FmDataset FmDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. Valid until the next
 * fairmix call on the same thread; never NULL.
 */
const char *fm_last_error(void);

/**
 * Loads a `f_1,...,f_d,y,z` CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FmStatus fm_dataset_load(const char *path, struct FmDataset **out);

/**
 * # Safety
 * `dataset` must come from this library and not have been freed. NULL is a no-op.
 */
void fm_dataset_free(struct FmDataset *dataset);

/**
 * Number of instances, or 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t fm_dataset_len(const struct FmDataset *dataset);

/**
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t fm_dataset_dimension(const struct FmDataset *dataset);

/**
 * Loads a `clf_1,...,clf_M` prediction matrix bound to `dataset`.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `dataset` a live handle and `out`
 * a valid pointer.
 */
enum FmStatus fm_classifiers_load(const char *path,
                                  const struct FmDataset *dataset,
                                  struct FmClassifiers **out);

/**
 * # Safety
 * `classifiers` must come from this library and not have been freed.
 */
void fm_classifiers_free(struct FmClassifiers *classifiers);

/**
 * # Safety
 * `classifiers` must be NULL or a live handle.
 */
size_t fm_classifiers_len(const struct FmClassifiers *classifiers);

/**
 * Builds reference scenario `figure` (1 to 4). Its prescribed weights are
 * copied into `out_weights` (capacity `weights_capacity`), and their count is
 * written to `out_weights_len` even when the buffer is too small.
 *
 * # Safety
 * All output pointers must be valid; `out_weights` must hold
 * `weights_capacity` doubles.
 */
enum FmStatus fm_scenario_new(uint8_t figure,
                              struct FmDataset **out_dataset,
                              struct FmClassifiers **out_members,
                              double *out_weights,
                              size_t weights_capacity,
                              size_t *out_weights_len);

/**
 * Group rate of one member. `*out_defined` is false when the conditioning
 * set is empty, in which case `*out_value` is NaN.
 *
 * # Safety
 * Handles must be live; output pointers valid.
 */
enum FmStatus fm_group_rate(const struct FmDataset *dataset,
                            const struct FmClassifiers *members,
                            size_t member,
                            uint32_t metric,
                            uint8_t z,
                            double *out_value,
                            bool *out_defined);

/**
 * Group rate of the ensemble with the given weights.
 *
 * # Safety
 * Handles must be live; `weights` must hold `weights_len` doubles.
 */
enum FmStatus fm_ensemble_group_rate(const struct FmDataset *dataset,
                                     const struct FmClassifiers *members,
                                     const double *weights,
                                     size_t weights_len,
                                     uint32_t metric,
                                     uint8_t z,
                                     double *out_value,
                                     bool *out_defined);

/**
 * # Safety
 * Handles must be live; `weights` must hold `weights_len` doubles.
 */
enum FmStatus fm_ensemble_accuracy(const struct FmDataset *dataset,
                                   const struct FmClassifiers *members,
                                   const double *weights,
                                   size_t weights_len,
                                   double *out_accuracy);

/**
 * Per-instance probability of the positive outcome. Writes the dataset size
 * to `out_len` even when `capacity` is too small.
 *
 * # Safety
 * Handles must be live; `out_q` must hold `capacity` doubles.
 */
enum FmStatus fm_acceptance_probability(const struct FmDataset *dataset,
                                        const struct FmClassifiers *members,
                                        const double *weights,
                                        size_t weights_len,
                                        double *out_q,
                                        size_t capacity,
                                        size_t *out_len);

/**
 * Solves for mixture weights with every listed metric's gap in
 * `[-tolerance, tolerance]`, maximizing accuracy when `maximize_accuracy`.
 * Returns `FM_STATUS_INFEASIBLE` when no mixture qualifies.
 *
 * # Safety
 * Handles must be live; `metrics` must hold `n_metrics` values,
 * `out_weights` must hold `capacity` doubles; `out_accuracy` valid.
 */
enum FmStatus fm_solve_fair_mixture(const struct FmDataset *dataset,
                                    const struct FmClassifiers *members,
                                    const uint32_t *metrics,
                                    size_t n_metrics,
                                    double tolerance,
                                    bool maximize_accuracy,
                                    double *out_weights,
                                    size_t capacity,
                                    double *out_accuracy);

/**
 * Fairness report as canonical JSON: the ensemble report when `weights` is
 * non-NULL, otherwise a list of per-classifier reports. Returns NULL on
 * failure; free the result with `fm_string_free`.
 *
 * # Safety
 * Handles must be live; `weights` is NULL or holds `weights_len` doubles.
 */
char *fm_audit_json(const struct FmDataset *dataset,
                    const struct FmClassifiers *members,
                    const double *weights,
                    size_t weights_len,
                    double tolerance);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void fm_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRMIX_H */
