#ifndef MEPOGNN_MEPOGNN_H
#define MEPOGNN_MEPOGNN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MEPOGNN_BUILDING)
#    define MEPO_API __declspec(dllexport)
#  else
#    define MEPO_API __declspec(dllimport)
#  endif
#elif defined(MEPOGNN_BUILDING)
#  define MEPO_API __attribute__((visibility("default")))
#else
#  define MEPO_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mepo_status {
    MEPO_OK = 0,
    MEPO_ERR_IO = 1,
    MEPO_ERR_SCHEMA = 2,
    MEPO_ERR_DATA = 3,
    MEPO_ERR_CONFIG = 4,
    MEPO_ERR_NUMERIC = 5,
    MEPO_ERR_CONTRACT = 6,
    MEPO_ERR_ARGUMENT = 7,
    MEPO_ERR_INTERNAL = 8
} mepo_status;

typedef struct mepo_dataset mepo_dataset;
typedef struct mepo_model mepo_model;

/* Receives one progress line (no trailing newline). */
typedef void (*mepo_log_fn)(const char* line, void* user);

MEPO_API const char* mepo_version(void);
MEPO_API const char* mepo_status_name(mepo_status status);

/* Message of the last failed call on this thread; empty after a success. */
MEPO_API const char* mepo_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
MEPO_API void mepo_string_free(char* s);

/* Null-terminated list of command names accepted by mepo_run. */
MEPO_API const char* const* mepo_commands(void);

/* ---- configuration (JSON text) ---- */

MEPO_API mepo_status mepo_config_default(char** out_json);
/* Reads a config file and returns it with every default filled in. */
MEPO_API mepo_status mepo_config_load(const char* path, char** out_json);
/* Parses, checks for unknown keys and returns the completed config. */
MEPO_API mepo_status mepo_config_normalize(const char* json, char** out_json);

/* Runs one command; artifacts and manifest.json go to the config's output_dir.
 * log may be NULL. */
MEPO_API mepo_status mepo_run(const char* command, const char* config_json, mepo_log_fn log, void* user);

/* ---- datasets ---- */

/* Loads the CSV inputs named by the config (data_dir and paths). */
MEPO_API mepo_status mepo_dataset_load(const char* config_json, mepo_dataset** out);
MEPO_API mepo_status mepo_dataset_synth(const char* scenario_json, uint64_t seed, mepo_dataset** out);
MEPO_API void mepo_dataset_free(mepo_dataset* ds);
MEPO_API size_t mepo_dataset_regions(const mepo_dataset* ds);
MEPO_API size_t mepo_dataset_days(const mepo_dataset* ds);
/* Daily confirmed cases, region-major [regions * days]. */
MEPO_API mepo_status mepo_dataset_cases(const mepo_dataset* ds, double* out, size_t len);

/* ---- trained models ---- */

MEPO_API mepo_status mepo_model_load(const char* checkpoint_path, mepo_model** out);
MEPO_API void mepo_model_free(mepo_model* m);
MEPO_API size_t mepo_model_horizon(const mepo_model* m);
/* Forecast from the window ending on day `origin` of ds. Each output is
 * region-major [regions * horizon]; beta, gamma may be NULL. */
MEPO_API mepo_status mepo_model_forecast(mepo_model* m, const mepo_dataset* ds, size_t origin, double* cases,
                                         double* beta, double* gamma, size_t len);

/* ---- mechanistic core ---- */

/* One extended metapopulation step for n regions, updating S, I, R in place.
 * h is row-major n x n; new_cases receives the n predicted daily cases. */
MEPO_API mepo_status mepo_step(size_t n, double* S, double* I, double* R, const double* P, const double* beta,
                               const double* gamma, const double* h, double* new_cases);

#ifdef __cplusplus
}
#endif

#endif
