#ifndef BANDIT_CPDP_H
#define BANDIT_CPDP_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BcpdpStatus {
  BCPDP_STATUS_OK = 0,
  BCPDP_STATUS_NULL_POINTER = 1,
  BCPDP_STATUS_INVALID_UTF8 = 2,
  BCPDP_STATUS_CONFIG = 3,
  BCPDP_STATUS_DATASET = 4,
  BCPDP_STATUS_SIMULATION = 5,
  BCPDP_STATUS_STATISTICS = 6,
  BCPDP_STATUS_IO = 7,
  /**
   * The ratio's denominator is zero.
   */
  BCPDP_STATUS_UNDEFINED = 8,
  BCPDP_STATUS_PANIC = 9,
} BcpdpStatus;

/**
 * Parsed experiment configuration.
 */
typedef struct BcpdpConfig BcpdpConfig;

/**
 * Results of one experiment run.
 */
typedef struct BcpdpResults BcpdpResults;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the last error message on this thread, or null. Free the result
 * with [`bcpdp_string_free`].
 */
char *bcpdp_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a pointer returned by this library.
 */
void bcpdp_string_free(char *s);

/**
 * Library name and version; static, do not free.
 */
const char *bcpdp_version(void);

/**
 * Parses a TOML config. An empty string gives the default settings.
 *
 * # Safety
 * `toml` must be a valid NUL-terminated string; `out` must be writable.
 */
enum BcpdpStatus bcpdp_config_from_toml(const char *toml, struct BcpdpConfig **out);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum BcpdpStatus bcpdp_config_set_seed(struct BcpdpConfig *config, uint64_t seed);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void bcpdp_config_free(struct BcpdpConfig *config);

/**
 * Runs the full experiment described by `config`.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum BcpdpStatus bcpdp_experiment_run(const struct BcpdpConfig *config, struct BcpdpResults **out);

/**
 * Number of completed repetitions.
 *
 * # Safety
 * `results` must be null or a live handle.
 */
size_t bcpdp_results_len(const struct BcpdpResults *results);

/**
 * Comparison table as CSV; free with [`bcpdp_string_free`].
 *
 * # Safety
 * `results` must be a live handle.
 */
char *bcpdp_results_table1_csv(const struct BcpdpResults *results);

/**
 * Baseline table as CSV; free with [`bcpdp_string_free`].
 *
 * # Safety
 * `results` must be a live handle.
 */
char *bcpdp_results_table2_csv(const struct BcpdpResults *results);

/**
 * Run manifest text; free with [`bcpdp_string_free`].
 *
 * # Safety
 * `results` must be a live handle.
 */
char *bcpdp_results_manifest(const struct BcpdpResults *results);

/**
 * Writes the report files and manifest into `dir`, creating it if needed.
 *
 * # Safety
 * `results` must be a live handle; `dir` a valid NUL-terminated string.
 */
enum BcpdpStatus bcpdp_results_write(const struct BcpdpResults *results, const char *dir);

/**
 * # Safety
 * `results` must be null or a handle not yet freed.
 */
void bcpdp_results_free(struct BcpdpResults *results);

/**
 * (TPR + TNR) / 2, with 0.5 when either class is absent.
 */
double bcpdp_arm_auc(uint64_t tp, uint64_t fp, uint64_t tn, uint64_t fn_);

/**
 * Two-sided Wilcoxon signed-rank p-value for paired samples `a[i]`, `b[i]`.
 *
 * # Safety
 * `a` and `b` must point to `n` readable doubles; `p_value` must be writable.
 */
enum BcpdpStatus bcpdp_wilcoxon(const double *a, const double *b, size_t n, double *p_value);

/**
 * b / a - 1; [`BcpdpStatus::Undefined`] when `a` is zero.
 *
 * # Safety
 * `out` must be writable.
 */
enum BcpdpStatus bcpdp_rdiff(double a, double b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BANDIT_CPDP_H */
