#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "compvar.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        CvStatus s_ = (expr);                                              \
        if (s_ != CV_STATUS_OK) {                                          \
            fprintf(stderr, "%s -> %d: %s\n", #expr, s_, cv_last_error()); \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: smoke <prices.csv>\n");
        return 2;
    }
    CvSeries *series = NULL;
    CHECK(cv_series_from_csv(argv[1], &series));
    if (cv_series_len(series) != 700) return 1;

    CvBacktestConfig cfg = {0.05, 5.0, 200, CV_DIST_NORMAL, 0.0, NAN};
    CvReport *report = NULL;
    CHECK(cv_backtest_run(series, &cfg, &report));

    size_t n = cv_report_steps(report);
    double *var = malloc(n * sizeof *var);
    CHECK(cv_report_var_adj(report, var, n));
    if (cv_report_var_adj(report, var, n - 1) != CV_STATUS_BUFFER_TOO_SMALL) return 1;

    CvSummary s;
    CHECK(cv_report_summary(report, &s));
    printf("steps %zu hits %zu alpha_hat %.4f LR_uc %.4f LR_ind %.4f\n", s.steps, s.hits,
           s.alpha_hat_raw, s.kupiec.p_value, s.christoffersen.p_value);

    CvSeries *bad = NULL;
    if (cv_series_from_csv("/nonexistent.csv", &bad) != CV_STATUS_IO || bad) return 1;

    free(var);
    cv_report_free(report);
    cv_series_free(series);
    return s.steps == 500 ? 0 : 1;
}
