#ifndef AKGRANK_AKGRANK_H
#define AKGRANK_AKGRANK_H

/*
 * C interface to the akgrank active-ranking engine.
 *
 * Every function returns an akgrank_status; on failure a message is available
 * from akgrank_last_error() on the calling thread. Strings returned through
 * `char**` out-parameters are owned by the caller and released with
 * akgrank_string_free().
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(AKGRANK_BUILDING)
#    define AKGRANK_API __declspec(dllexport)
#  else
#    define AKGRANK_API __declspec(dllimport)
#  endif
#else
#  define AKGRANK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum akgrank_status {
  AKGRANK_OK = 0,
  AKGRANK_E_INVALID_ARGUMENT = 1,
  AKGRANK_E_DOMAIN = 2,
  AKGRANK_E_NUMERICAL = 3,
  AKGRANK_E_EXHAUSTED = 4,
  AKGRANK_E_CONSTRAINT = 5,
  AKGRANK_E_UNAVAILABLE = 6,
  AKGRANK_E_IO = 7,
  AKGRANK_E_PARSE = 8,
  AKGRANK_E_REFUSED = 9,
  AKGRANK_E_INTERNAL = 99
} akgrank_status;

typedef struct akgrank_session akgrank_session;
typedef struct akgrank_report akgrank_report;

/* A query: compare items i < j, by `worker` (-1 when workers are not modeled). */
typedef struct akgrank_decision {
  size_t i;
  size_t j;
  int64_t worker;
} akgrank_decision;

AKGRANK_API const char* akgrank_version(void);
AKGRANK_API const char* akgrank_last_error(void);
AKGRANK_API const char* akgrank_status_name(int status);
AKGRANK_API void akgrank_string_free(char* s);

/* Special functions. */
AKGRANK_API int akgrank_log_beta(double a, double b, double* out);
AKGRANK_API int akgrank_reg_inc_beta(double x, double a, double b, double* out);
/* Pr(theta_i > theta_j) under a Dirichlet with parameters alpha_i, alpha_j. */
AKGRANK_API int akgrank_pr_theta_greater(double alpha_i, double alpha_j, double* out);

/*
 * Online session. `config_json` keys (all optional except items):
 *   items, workers (0), alpha0 (1), mu0 (4), nu0 (1),
 *   policy ("akg" | "random" | "distance" | "akg-batch:B"), seed (1).
 */
AKGRANK_API int akgrank_session_create(const char* config_json, akgrank_session** out);
AKGRANK_API void akgrank_session_destroy(akgrank_session* s);
/* Writes up to `capacity` decisions; `*count` receives the number produced
 * (or needed, when capacity is too small). */
AKGRANK_API int akgrank_session_select(akgrank_session* s, akgrank_decision* out,
                                       size_t capacity, size_t* count);
/* outcome: +1 when item i was preferred, -1 when item j was. */
AKGRANK_API int akgrank_session_observe(akgrank_session* s, size_t i, size_t j,
                                        int64_t worker, int outcome);
AKGRANK_API int akgrank_session_stage(const akgrank_session* s, size_t* out);
/* ranks[k] in 1..K, larger is more preferred. `capacity` must be >= K. */
AKGRANK_API int akgrank_session_ranking(const akgrank_session* s, int* ranks, size_t capacity);
AKGRANK_API int akgrank_session_snapshot(const akgrank_session* s, char** json_out);

/*
 * Batch experiments. `config_json` follows the experiment config schema in
 * the README. When a trial fails the error status is returned and, if any
 * trials finished before it, `*out` holds the partial report.
 */
AKGRANK_API int akgrank_experiment_run(const char* config_json, akgrank_report** out);
AKGRANK_API void akgrank_report_destroy(akgrank_report* r);
AKGRANK_API int akgrank_report_json(const akgrank_report* r, char** json_out);
/* format: "csv", "json" or "both" (NULL means both). */
AKGRANK_API int akgrank_report_export(const akgrank_report* r, const char* dir,
                                      const char* format);

/* Self-validation suites; options and results are JSON objects. */
AKGRANK_API int akgrank_oracle_check(const char* options_json, char** result_json,
                                     int* passed);
AKGRANK_API int akgrank_lop_check(const char* options_json, char** result_json, int* passed);

#ifdef __cplusplus
}
#endif

#endif
