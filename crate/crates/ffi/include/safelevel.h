#ifndef SAFELEVEL_H
#define SAFELEVEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlCategory {
  SL_CATEGORY_NO_DETERIORATION = 0,
  SL_CATEGORY_POTENTIAL_DETERIORATION = 1,
  SL_CATEGORY_PROBABLE_DETERIORATION = 2,
} SlCategory;

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_DOMAIN = 2,
  SL_STATUS_OUT_OF_RANGE = 3,
  SL_STATUS_INFINITE_MOMENT = 4,
  SL_STATUS_DIMENSION_MISMATCH = 5,
  SL_STATUS_INVALID_ARGUMENT = 6,
  SL_STATUS_PANIC = 7,
} SlStatus;

typedef enum SlTwoSidedMethod {
  SL_TWO_SIDED_METHOD_CENTRAL = 0,
  SL_TWO_SIDED_METHOD_MIN_LIKELIHOOD = 1,
} SlTwoSidedMethod;

/**
 * One-sided p-value table.
 */
typedef struct SlPTable SlPTable;

/**
 * Error-rate study under construction.
 */
typedef struct SlStudy SlStudy;

typedef struct SlRateRatioResult {
  double p_one_sided;
  double p_two_sided;
  /**
   * Conditional success probability under the null.
   */
  double p0;
  /**
   * Total events conditioned on.
   */
  uint64_t conditional_n;
} SlRateRatioResult;

typedef struct SlErrorRates {
  double alpha_hat;
  double power_hat;
  double mc_stderr_alpha;
  double mc_stderr_power;
  uint64_t replications;
} SlErrorRates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *sl_last_error_message(void);

void sl_clear_error(void);

/**
 * Static NUL-terminated version string.
 */
const char *sl_version(void);

/**
 * Conditional rate-ratio test of `target_events` in `target_exposure`
 * against `ref_events` in `ref_exposure`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one result.
 */
enum SlStatus sl_rate_ratio_test(uint64_t ref_events,
                                 double ref_exposure,
                                 uint64_t target_events,
                                 double target_exposure,
                                 double null_ratio,
                                 enum SlTwoSidedMethod method,
                                 struct SlRateRatioResult *out);

/**
 * Posterior probability that the target rate exceeds the reference rate
 * under a Beta(`prior_alpha`, `prior_beta`) prior.
 *
 * # Safety
 * `out` must be null or point to a writable double.
 */
enum SlStatus sl_posterior_deterioration(double prior_alpha,
                                         double prior_beta,
                                         uint64_t ref_events,
                                         double ref_exposure,
                                         uint64_t target_events,
                                         double target_exposure,
                                         double *out);

/**
 * Embedded published posterior level for 4-year reference and 1-year target
 * counts. Counts outside the table give `SL_STATUS_OUT_OF_RANGE`.
 *
 * # Safety
 * `out` must be null or point to a writable double.
 */
enum SlStatus sl_posterior_table_lookup(size_t n_ref, size_t n_target, double *out);

/**
 * # Safety
 * `out` must be null or point to a writable category.
 */
enum SlStatus sl_classify_p(double p, double probable, double potential, enum SlCategory *out);

/**
 * # Safety
 * `out` must be null or point to a writable category.
 */
enum SlStatus sl_classify_posterior(double prob,
                                    double alert,
                                    double warning,
                                    enum SlCategory *out);

/**
 * P(X >= k) for X ~ Binomial(n, p).
 *
 * # Safety
 * `out` must be null or point to a writable double.
 */
enum SlStatus sl_binom_upper_tail(uint64_t k, uint64_t n, double p, double *out);

/**
 * Regularized incomplete beta I_x(a, b).
 *
 * # Safety
 * `out` must be null or point to a writable double.
 */
enum SlStatus sl_reg_inc_beta(double a, double b, double x, double *out);

/**
 * Builds the (max_ref + 1) x (max_target + 1) table of one-sided p-values.
 *
 * # Safety
 * `out` must be null or point to a writable handle slot.
 */
enum SlStatus sl_ptable_new(uint64_t max_ref,
                            uint64_t max_target,
                            double ref_exposure,
                            double target_exposure,
                            struct SlPTable **out);

/**
 * # Safety
 * `table` must come from `sl_ptable_new`; out-pointers must be null or writable.
 */
enum SlStatus sl_ptable_dims(const struct SlPTable *table, size_t *rows, size_t *cols);

/**
 * # Safety
 * `table` must come from `sl_ptable_new`; `out` must be null or writable.
 */
enum SlStatus sl_ptable_get(const struct SlPTable *table, size_t row, size_t col, double *out);

/**
 * Releases a table. Null is ignored.
 *
 * # Safety
 * `table` must be null or come from `sl_ptable_new` and not be freed twice.
 */
void sl_ptable_free(struct SlPTable *table);

/**
 * New study using the rate-ratio procedure with thresholds 0.1 / 0.25 and
 * counting probable decisions as detections.
 *
 * # Safety
 * `out` must be null or point to a writable handle slot.
 */
enum SlStatus sl_study_new(double rate_ref,
                           double rate_target_null,
                           double rate_target_alt,
                           double exposure_ref,
                           double exposure_target,
                           uint64_t replications,
                           struct SlStudy **out);

/**
 * # Safety
 * `study` must come from `sl_study_new`.
 */
enum SlStatus sl_study_use_rate_ratio(struct SlStudy *study, double probable, double potential);

/**
 * Switches to the embedded posterior table; counts beyond it are clipped.
 *
 * # Safety
 * `study` must come from `sl_study_new`.
 */
enum SlStatus sl_study_use_posterior_table(struct SlStudy *study, double alert, double warning);

/**
 * Non-zero: potential decisions also count as detections.
 *
 * # Safety
 * `study` must come from `sl_study_new`.
 */
enum SlStatus sl_study_count_potential(struct SlStudy *study, bool enabled);

/**
 * Runs the study. Results depend on `seed` only, not on `workers`
 * (0 means all available threads).
 *
 * # Safety
 * `study` must come from `sl_study_new`; `out` must be null or writable.
 */
enum SlStatus sl_study_run(const struct SlStudy *study,
                           uint64_t seed,
                           size_t workers,
                           struct SlErrorRates *out);

/**
 * Releases a study. Null is ignored.
 *
 * # Safety
 * `study` must be null or come from `sl_study_new` and not be freed twice.
 */
void sl_study_free(struct SlStudy *study);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAFELEVEL_H */
