#ifndef IMPOBS_IMPOBS_H
#define IMPOBS_IMPOBS_H

#include <stddef.h>
#include <stdint.h>

#if defined(IMPOBS_BUILDING_LIBRARY)
#define IMPOBS_API __attribute__((visibility("default")))
#else
#define IMPOBS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum impobs_status {
    IMPOBS_OK = 0,
    IMPOBS_CHECK_FAILED = 1,     /* infeasible design or failed verification */
    IMPOBS_CONFIG_ERROR = 2,     /* bad config text, key or value */
    IMPOBS_INVALID_ARGUMENT = 3, /* null handle, bad enum value, ... */
    IMPOBS_NUMERIC_ERROR = 4,    /* integration failure, singular matrix, ... */
    IMPOBS_IO_ERROR = 5
} impobs_status;

typedef enum impobs_sigma_variant {
    IMPOBS_SIGMA_FACTOR2 = 0,
    IMPOBS_SIGMA_EQ15 = 1
} impobs_sigma_variant;

typedef struct impobs_config impobs_config;
typedef struct impobs_design impobs_design;
typedef struct impobs_report impobs_report;

/* Message of the last failed call on this thread; never NULL. */
IMPOBS_API const char* impobs_last_error(void);
IMPOBS_API const char* impobs_version(void);

/* Config handles. */
IMPOBS_API impobs_status impobs_config_load(const char* path, impobs_config** out);
IMPOBS_API impobs_status impobs_config_from_string(const char* text, impobs_config** out);
/* Bundled scenario: example_open_loop, example_noisy, example_noiseless, synthetic_coupled. */
IMPOBS_API impobs_status impobs_config_from_corpus(const char* name, impobs_config** out);
IMPOBS_API impobs_status impobs_config_set_sigma_variant(impobs_config* cfg, impobs_sigma_variant variant);
IMPOBS_API impobs_status impobs_config_set_output_dir(impobs_config* cfg, const char* dir);
/* 0 disables all file output of the command functions. */
IMPOBS_API impobs_status impobs_config_set_write_files(impobs_config* cfg, int enabled);
IMPOBS_API void impobs_config_free(impobs_config* cfg);

/* Design pipeline. Returns IMPOBS_OK even for infeasible designs; query
   impobs_design_feasible. */
IMPOBS_API impobs_status impobs_design_run(const impobs_config* cfg, impobs_design** out);
IMPOBS_API int impobs_design_feasible(const impobs_design* d);
/* Named scalar: gamma, beta, varpi_o, kappa_n, kappa_o, kappa, lambda_on,
   lambda_no, t_max_noiseless, t_min, t_max, alpha. NaN if unknown. */
IMPOBS_API impobs_status impobs_design_get(const impobs_design* d, const char* name, double* value);
IMPOBS_API size_t impobs_design_diagnostic_count(const impobs_design* d);
IMPOBS_API const char* impobs_design_diagnostic(const impobs_design* d, size_t index);
/* Serialized design in config syntax (result.* keys). */
IMPOBS_API const char* impobs_design_text(const impobs_design* d);
IMPOBS_API void impobs_design_free(impobs_design* d);

/* Commands. On completion *out holds a report and the return value is its
   status, mirroring the CLI exit code (IMPOBS_OK or IMPOBS_CHECK_FAILED).
   Config problems return IMPOBS_CONFIG_ERROR and no report. */
IMPOBS_API impobs_status impobs_certify(const impobs_config* cfg, impobs_report** out);
IMPOBS_API impobs_status impobs_design_report(const impobs_config* cfg, impobs_report** out);
/* seeds == 0 uses one seed. */
IMPOBS_API impobs_status impobs_simulate(const impobs_config* cfg, size_t seeds, impobs_report** out);
/* fig3 .. fig6; files go to out_dir (NULL: "out"). */
IMPOBS_API impobs_status impobs_reproduce(const char* figure, const char* out_dir, impobs_report** out);

IMPOBS_API impobs_status impobs_report_status(const impobs_report* r);
IMPOBS_API const char* impobs_report_text(const impobs_report* r);
IMPOBS_API size_t impobs_report_file_count(const impobs_report* r);
IMPOBS_API const char* impobs_report_file(const impobs_report* r, size_t index);
IMPOBS_API void impobs_report_free(impobs_report* r);

/* Scalar helpers. An empty window returns IMPOBS_CHECK_FAILED with both
   bounds filled in; out-of-range inputs return IMPOBS_INVALID_ARGUMENT. */
IMPOBS_API impobs_status impobs_t_window(double gamma, double varpi_o, double kappa, double lambda_no,
                                         double lambda_on, double beta, double alpha, double* t_min,
                                         double* t_max);
IMPOBS_API impobs_status impobs_iss_ball_radius(double alpha, double w_inf, double* radius);

#ifdef __cplusplus
}
#endif

#endif
