#ifndef COMPVAR_H
#define COMPVAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum CvStatus {
  CV_STATUS_OK = 0,
  CV_STATUS_NULL_POINTER = 1,
  /**
   * A configuration value is out of its domain (alpha, kappa, dof, window).
   */
  CV_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The input data cannot be used (non-finite, degenerate, too short, bad CSV).
   */
  CV_STATUS_DATA_ERROR = 3,
  /**
   * A caller-provided buffer is too small.
   */
  CV_STATUS_BUFFER_TOO_SMALL = 4,
  CV_STATUS_IO = 5,
  /**
   * A panic or serialization failure inside the library.
   */
  CV_STATUS_INTERNAL = 6,
} CvStatus;

/**
 * Distribution fitted to each rolling window.
 */
typedef enum CvDist {
  CV_DIST_NORMAL = 0,
  CV_DIST_EMPIRICAL = 1,
  /**
   * Student-t with `dof` from [`CvBacktestConfig`].
   */
  CV_DIST_STUDENT_T = 2,
} CvDist;

/**
 * Opaque backtest report.
 */
typedef struct CvReport CvReport;

/**
 * Opaque return series.
 */
typedef struct CvSeries CvSeries;

typedef struct CvBacktestConfig {
  double alpha;
  double kappa;
  size_t window;
  enum CvDist dist;
  /**
   * Degrees of freedom; read only for `CV_DIST_STUDENT_T`.
   */
  double dof;
  /**
   * Bound L for the admissibility warning; NaN or <= 0 means max |X|.
   */
  double bound;
} CvBacktestConfig;

typedef struct CvTestResult {
  double statistic;
  double p_value;
} CvTestResult;

typedef struct CvLedger {
  uint64_t m00;
  uint64_t m01;
  uint64_t m10;
  uint64_t m11;
} CvLedger;

typedef struct CvSummary {
  double alpha;
  /**
   * NaN when the run used a per-step schedule.
   */
  double kappa;
  size_t window;
  size_t steps;
  size_t hits;
  double bound;
  double alpha_hat_raw;
  double alpha_hat_weighted;
  double mean_var_x100;
  struct CvTestResult kupiec;
  struct CvTestResult christoffersen;
  struct CvLedger ledger;
} CvSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *cv_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cv_version(void);

/**
 * # Safety
 * `values` must point to `len` doubles; `out` must be writable.
 */
enum CvStatus cv_series_from_returns(const double *values, size_t len, struct CvSeries **out);

/**
 * Log returns of a positive price sequence.
 *
 * # Safety
 * `prices` must point to `len` doubles; `out` must be writable.
 */
enum CvStatus cv_series_from_prices(const double *prices, size_t len, struct CvSeries **out);

/**
 * Reads a `date,close` CSV file and converts it to log returns.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum CvStatus cv_series_from_csv(const char *path, struct CvSeries **out);

/**
 * # Safety
 * `series` must be a live handle or null.
 */
size_t cv_series_len(const struct CvSeries *series);

/**
 * Realized max |X| of the series; NaN for a null handle.
 *
 * # Safety
 * `series` must be a live handle or null.
 */
double cv_series_bound(const struct CvSeries *series);

/**
 * # Safety
 * `series` must come from a `cv_series_from_*` function and not be freed
 * twice. Null is ignored.
 */
void cv_series_free(struct CvSeries *series);

/**
 * Runs the compensated rolling-window backtest.
 *
 * # Safety
 * `series` must be a live handle, `cfg` readable, `out` writable.
 */
enum CvStatus cv_backtest_run(const struct CvSeries *series,
                              const struct CvBacktestConfig *cfg,
                              struct CvReport **out);

/**
 * # Safety
 * `report` must come from [`cv_backtest_run`] and not be freed twice.
 * Null is ignored.
 */
void cv_report_free(struct CvReport *report);

/**
 * Number of tested steps (`T - W`); 0 for a null handle.
 *
 * # Safety
 * `report` must be a live handle or null.
 */
size_t cv_report_steps(const struct CvReport *report);

/**
 * # Safety
 * `report` must be a live handle; `out` writable.
 */
enum CvStatus cv_report_summary(const struct CvReport *report, struct CvSummary *out);

/**
 * Copies the adjusted VaR path (`cv_report_steps` values) into `buf`.
 *
 * # Safety
 * `report` must be a live handle; `buf` must hold `cap` doubles.
 */
enum CvStatus cv_report_var_adj(const struct CvReport *report, double *buf, size_t cap);

/**
 * Copies the unadjusted VaR path.
 *
 * # Safety
 * As [`cv_report_var_adj`].
 */
enum CvStatus cv_report_var_raw(const struct CvReport *report, double *buf, size_t cap);

/**
 * Copies the prior-weighted violation-rate path.
 *
 * # Safety
 * As [`cv_report_var_adj`].
 */
enum CvStatus cv_report_alpha_hat_path(const struct CvReport *report, double *buf, size_t cap);

/**
 * Copies the hit indicators as 0/1 bytes.
 *
 * # Safety
 * `report` must be a live handle; `buf` must hold `cap` bytes.
 */
enum CvStatus cv_report_hits(const struct CvReport *report, uint8_t *buf, size_t cap);

/**
 * Serializes the full report as JSON. Free the string with [`cv_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` writable.
 */
enum CvStatus cv_report_to_json(const struct CvReport *report, char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void cv_string_free(char *s);

/**
 * # Safety
 * `out` must be writable.
 */
enum CvStatus cv_inv_normal_cdf(double p, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CvStatus cv_chi2_1_survival(double x, double *out);

/**
 * Unconditional-coverage likelihood ratio.
 *
 * # Safety
 * `out` must be writable.
 */
enum CvStatus cv_kupiec(struct CvLedger ledger, double alpha, struct CvTestResult *out);

/**
 * Markov independence likelihood ratio.
 *
 * # Safety
 * `out` must be writable.
 */
enum CvStatus cv_christoffersen(struct CvLedger ledger, struct CvTestResult *out);

/**
 * Transition counts of a 0/1 hit sequence.
 *
 * # Safety
 * `hits` must point to `len` bytes; `out` must be writable.
 */
enum CvStatus cv_ledger_from_hits(const uint8_t *hits, size_t len, struct CvLedger *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMPVAR_H */
