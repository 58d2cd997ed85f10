/* ksf — kernel spectral wind-speed forecasting, C API.
 *
 * Every function returning ksf_status reports KSF_OK (0) on success; on
 * failure the returned code classifies the error and ksf_last_error()
 * yields a thread-local message. Out-parameters are written only on
 * success. Handles are opaque and must be released with the matching
 * _free function; NULL is always safe to free.
 */
#ifndef KSF_H
#define KSF_H

#include <stdint.h>

#if defined(_WIN32)
#define KSF_API __declspec(dllexport)
#else
#define KSF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ksf_status {
  KSF_OK = 0,
  KSF_ERR_INVALID = 1, /* bad argument or configuration */
  KSF_ERR_DATA = 2,    /* parse, validation, or degenerate-data failure */
  KSF_ERR_COMPUTE = 3, /* numerical failure (rank, collapse, non-convergence) */
  KSF_ERR_IO = 4       /* filesystem failure */
} ksf_status;

KSF_API const char* ksf_last_error(void);
KSF_API const char* ksf_version(void);

/* ----- hourly wind-speed series ----- */

typedef struct ksf_series ksf_series;

/* missing_policy: "error" (default when NULL) or "forward-fill". */
KSF_API ksf_status ksf_series_load_csv(const char* path, const char* missing_policy,
                                       ksf_series** out);
KSF_API ksf_status ksf_series_write_csv(const ksf_series* s, const char* path);

/* spec_json: NULL for the built-in two-state fixture, else a JSON object
 * {"transition": [[..],[..]], "means": [..], "variances": [..],
 *  "initial": [..]}  (transition columns sum to 1). */
KSF_API ksf_status ksf_series_synth(const char* spec_json, int64_t length, uint64_t seed,
                                    ksf_series** out);

KSF_API ksf_status ksf_series_split(const ksf_series* s, int64_t train_start, int64_t train_len,
                                    int64_t test_start, int64_t test_len, ksf_series** train_out,
                                    ksf_series** test_out);

KSF_API int64_t ksf_series_length(const ksf_series* s);
KSF_API ksf_status ksf_series_values(const ksf_series* s, double* buf, int64_t buflen);
KSF_API const char* ksf_series_id(const ksf_series* s);
KSF_API ksf_status ksf_series_set_id(ksf_series* s, const char* id);
KSF_API void ksf_series_free(ksf_series* s);

/* ----- KSHMM model and filtering ----- */

typedef struct ksf_model ksf_model;
typedef struct ksf_filter ksf_filter;

typedef struct ksf_forecast {
  double point;        /* persistence-switched point forecast (always finite) */
  double mean;         /* predictive mean, NaN when the step failed */
  double variance;     /* predictive variance (may be negative), NaN on failure */
  double mode;         /* mode estimate, NaN on failure */
  int mode_converged;  /* fixed-point iteration converged */
  int stable;          /* switching-rule verdict */
  int switched;        /* persistence replaced the model forecast */
} ksf_forecast;

/* sigma <= 0 selects the median heuristic; lambda <= 0 selects 0.01/sqrt(m). */
KSF_API ksf_status ksf_model_train(const ksf_series* train, int rank, double sigma, double lambda,
                                   ksf_model** out);
KSF_API ksf_status ksf_model_save(const ksf_model* m, const char* path);
KSF_API ksf_status ksf_model_load(const char* path, ksf_model** out);
KSF_API double ksf_model_sigma(const ksf_model* m);
KSF_API double ksf_model_lambda(const ksf_model* m);
KSF_API int ksf_model_rank(const ksf_model* m);
KSF_API int64_t ksf_model_train_size(const ksf_model* m);
/* buf receives the rank leading eigenvalue magnitudes, descending. */
KSF_API ksf_status ksf_model_eigenvalues(const ksf_model* m, double* buf, int buflen);
KSF_API void ksf_model_free(ksf_model* m);

KSF_API ksf_status ksf_filter_new(const ksf_model* m, ksf_filter** out);
KSF_API ksf_status ksf_filter_observe(ksf_filter* f, double x);
/* Total: internal instability resolves to persistence with switched = 1. */
KSF_API ksf_status ksf_filter_forecast(ksf_filter* f, ksf_forecast* out);
KSF_API void ksf_filter_free(ksf_filter* f);

/* ----- diagnostics ----- */

KSF_API ksf_status ksf_diagnose_bandwidth(const ksf_series* s, double* sigma_out);
/* ACF/PACF 95% cutoff lags, capped at `cap` (pass 0 for the default 24). */
KSF_API ksf_status ksf_diagnose_cutoffs(const ksf_series* s, int cap, int* pacf_cutoff_out,
                                        int* acf_cutoff_out);

/* ----- rolling benchmark ----- */

typedef struct ksf_benchmark ksf_benchmark;

KSF_API ksf_benchmark* ksf_benchmark_new(void);
/* Both series are copied into the benchmark. */
KSF_API ksf_status ksf_benchmark_add_pair(ksf_benchmark* b, const ksf_series* train,
                                          const ksf_series* test);
/* Comma-separated subset of: pst, arma-aic, arma-bic, svr, kshmm, kshmm-pst.
 * NULL or "" selects all six. */
KSF_API ksf_status ksf_benchmark_set_methods(ksf_benchmark* b, const char* methods_csv);
KSF_API ksf_status ksf_benchmark_set_kshmm(ksf_benchmark* b, int rank, double sigma,
                                           double lambda);
KSF_API ksf_status ksf_benchmark_set_svr_epsilon(ksf_benchmark* b, double epsilon);
KSF_API ksf_status ksf_benchmark_set_arma_cap(ksf_benchmark* b, int cap);
KSF_API ksf_status ksf_benchmark_set_jobs(ksf_benchmark* b, int jobs);

KSF_API ksf_status ksf_benchmark_run(ksf_benchmark* b);

KSF_API int ksf_benchmark_num_methods(const ksf_benchmark* b);
KSF_API int ksf_benchmark_num_series(const ksf_benchmark* b);
KSF_API const char* ksf_benchmark_method_name(const ksf_benchmark* b, int method);
KSF_API const char* ksf_benchmark_series_id(const ksf_benchmark* b, int series);
KSF_API ksf_status ksf_benchmark_final_rmse(const ksf_benchmark* b, int series, int method,
                                            double* out);
/* format: "csv", "markdown", or "both". */
KSF_API ksf_status ksf_benchmark_write_reports(const ksf_benchmark* b, const char* base_path,
                                               const char* format);
KSF_API void ksf_benchmark_free(ksf_benchmark* b);

#ifdef __cplusplus
}
#endif

#endif /* KSF_H */
