#ifndef CRF_H
#define CRF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrfStatus {
  CRF_STATUS_OK = 0,
  CRF_STATUS_NULL_POINTER = 1,
  CRF_STATUS_INVALID_CONFIG = 2,
  CRF_STATUS_INVALID_INPUT = 3,
  CRF_STATUS_DEPTH_OVERFLOW = 4,
  CRF_STATUS_SAMPLING_INFEASIBLE = 5,
  CRF_STATUS_NON_CONVERGENCE = 6,
  CRF_STATUS_BUDGET_EXCEEDED = 7,
  CRF_STATUS_IO = 8,
  CRF_STATUS_PANIC = 9,
} CrfStatus;

typedef enum CrfRebalanceMode {
  /**
   * One rebalanced sample, subsampled per tree.
   */
  CRF_REBALANCE_MODE_DATASET = 0,
  /**
   * Stratified per-tree subsamples.
   */
  CRF_REBALANCE_MODE_PER_SUBSAMPLE_FRACTION = 1,
} CrfRebalanceMode;

typedef enum CrfKernelMode {
  CRF_KERNEL_MODE_EXACT_D2 = 0,
  CRF_KERNEL_MODE_ENUMERATION = 1,
  CRF_KERNEL_MODE_MONTE_CARLO = 2,
} CrfKernelMode;

/**
 * Opaque labelled dataset in `[0,1]^d`.
 */
typedef struct CrfDataset CrfDataset;

/**
 * Growth-condition diagnostics for `(n, s, k, d)`.
 */
typedef struct CrfRateDiagnostics {
  double g1_ratio;
  double cond1_ratio;
  double cond2_ratio;
  double alpha_limit;
  double alpha1;
  double alpha2;
} CrfRateDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *crf_last_error_message(void);

/**
 * Build a dataset from `n` row-major points of dimension `d` and 0/1 labels.
 */
enum CrfStatus crf_dataset_new(size_t d,
                               const double *features,
                               const uint8_t *labels,
                               size_t n,
                               struct CrfDataset **out_dataset);

/**
 * Draw `n` points from the logistic model `P(Y=1|x) = 1/(1+exp(-(beta0 + beta.x)))`
 * with uniform features on `[0,1]^d`.
 */
enum CrfStatus crf_dataset_generate_logistic(double beta0,
                                             const double *beta,
                                             size_t d,
                                             size_t n,
                                             uint64_t seed,
                                             struct CrfDataset **out_dataset);

void crf_dataset_free(struct CrfDataset *dataset);

/**
 * Number of points; 0 for NULL.
 */
size_t crf_dataset_len(const struct CrfDataset *dataset);

/**
 * Feature dimension; 0 for NULL.
 */
size_t crf_dataset_dim(const struct CrfDataset *dataset);

enum CrfStatus crf_dataset_class_counts(const struct CrfDataset *dataset, size_t *n0, size_t *n1);

/**
 * Intercept giving class probability `target_p` for slopes `beta`.
 */
enum CrfStatus crf_calibrate_intercept(double target_p,
                                       const double *beta,
                                       size_t d,
                                       double *out_beta0);

/**
 * Forest of `trees` centered trees of depth `depth`, each on a uniform
 * subsample of `subsample` rows, evaluated at `x` (length `d`).
 */
enum CrfStatus crf_forest_predict(const struct CrfDataset *dataset,
                                  size_t trees,
                                  size_t subsample,
                                  uint32_t depth,
                                  const double *x,
                                  uint64_t seed,
                                  double *out_value);

/**
 * Rebalanced forest at `x`; estimates the rebalanced regression function.
 * `n_prime` is the rebalanced sample size in dataset mode.
 */
enum CrfStatus crf_rb_forest_predict(const struct CrfDataset *dataset,
                                     size_t trees,
                                     size_t subsample,
                                     uint32_t depth,
                                     double p_prime,
                                     size_t n_prime,
                                     enum CrfRebalanceMode mode,
                                     const double *x,
                                     uint64_t seed,
                                     double *out_value);

/**
 * Importance-sampling correction of a rebalanced prediction.
 */
enum CrfStatus crf_is_debias(double mu_rb, size_t n0, size_t n1, double p_prime, double *out_value);

double crf_mu_prime_of_mu(double mu, double p, double p_prime);

double crf_mu_of_mu_prime(double mu_prime, double p, double p_prime);

enum CrfStatus crf_cd_bounds(size_t d, double *lower, double *upper);

/**
 * Monte Carlo estimate of the limiting variance constant `C(d)`.
 */
enum CrfStatus crf_constant_cd(size_t d,
                               size_t samples,
                               uint64_t seed,
                               double *value,
                               double *std_error);

enum CrfStatus crf_kernel_second_moment(size_t d,
                                        uint32_t k,
                                        enum CrfKernelMode mode,
                                        uint64_t budget,
                                        uint64_t seed,
                                        double *value,
                                        double *std_error);

/**
 * `E[1/(1+Z)]` for `Z ~ Binomial(n, p)`.
 */
enum CrfStatus crf_inverse_binomial_moment(uint64_t n, double p, double *value);

enum CrfStatus crf_diameter_moment_bound(size_t d, uint32_t k, uint8_t order, double *value);

enum CrfStatus crf_check_rate_conditions(size_t n,
                                         size_t s,
                                         uint32_t k,
                                         size_t d,
                                         struct CrfRateDiagnostics *diagnostics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRF_H */
