/* C interface to the steinshrink library. */
#ifndef STEINSHRINK_H
#define STEINSHRINK_H

#include <stddef.h>

#if defined(_WIN32)
#define SS_API __declspec(dllexport)
#else
#define SS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ss_status {
  SS_OK = 0,
  SS_ERR_PARAMETER = 1,   /* bad configuration, parameters or usage */
  SS_ERR_NUMERICAL = 2,   /* singularity guard tripped during Monte Carlo */
  SS_ERR_UNAVAILABLE = 3, /* quantity not available for this model */
  SS_ERR_IO = 4,          /* output file could not be written */
  SS_ERR_INTERNAL = 5
} ss_status;

/* Opaque experiment configuration. */
typedef struct ss_config ss_config;

SS_API const char* ss_version(void);

/* Message of the last failed call on the calling thread ("" if none). */
SS_API const char* ss_last_error(void);

SS_API ss_status ss_config_create(ss_config** out);
SS_API void ss_config_destroy(ss_config* config);
/* Keys: command, model, d, k, sigma, eps, theta, estimator, lambda,
 * lambda_grid, reps, seed, out, dims, c_low, c_high, bounds, alpha_minus,
 * alpha_plus, pinsker, threads. Dashes and underscores are interchangeable. */
SS_API ss_status ss_config_set(ss_config* config, const char* key, const char* value);
SS_API ss_status ss_config_load_file(ss_config* config, const char* path);

/* Runs the configured command. On success *csv_out holds the CSV text, to be
 * released with ss_string_free. */
SS_API ss_status ss_run(const ss_config* config, char** csv_out);
/* Runs the command and writes the CSV to the configured `out` path, or to
 * stdout when it is unset or "-". */
SS_API ss_status ss_run_to_output(const ss_config* config);
SS_API void ss_string_free(char* text);

/* Names separated by newlines; static storage. */
SS_API const char* ss_command_names(void);
SS_API const char* ss_model_names(void);

/* Pointwise estimators and risk estimates (x and out hold d doubles). */
SS_API ss_status ss_james_stein(const double* x, size_t d, double lambda, double* out);
SS_API ss_status ss_soft_threshold(const double* x, size_t d, double lambda, double* out);
/* SURE with covariance sigma2 * Id. estimator: "identity", "james-stein",
 * "soft-threshold". */
SS_API ss_status ss_sure(const double* x, size_t d, const char* estimator, double lambda, double sigma2,
                         double* out);
SS_API ss_status ss_pinsker_limit(double sigma2, double c2, double* out);

#ifdef __cplusplus
}
#endif

#endif
