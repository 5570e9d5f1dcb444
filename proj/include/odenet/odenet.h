#ifndef ODENET_ODENET_H
#define ODENET_ODENET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ODENET_API __declspec(dllexport)
#else
#define ODENET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum odenet_status {
  ODENET_OK = 0,
  ODENET_ERROR_CONFIG = 1,
  ODENET_ERROR_TRAINING_DIVERGED = 2,
  ODENET_ERROR_SIMULATION_DIVERGED = 3,
  ODENET_ERROR_RECIPE_FAILED = 4,
  ODENET_ERROR_IO = 5,
  ODENET_ERROR_INVALID_ARGUMENT = 6,
  ODENET_ERROR_BASIS_MISMATCH = 7,
  ODENET_ERROR_INTERNAL = 8
} odenet_status;

/* Message for the last failure on the calling thread; never NULL. */
ODENET_API const char* odenet_last_error(void);
ODENET_API const char* odenet_version(void);
/* Frees strings returned through char** out-parameters. */
ODENET_API void odenet_string_free(char* s);

typedef void (*odenet_log_fn)(const char* line, void* user);

/* A parsed run config plus command-line overrides. */
typedef struct odenet_run odenet_run;

/* config_path may be NULL for verbs that need no config (report). */
ODENET_API odenet_status odenet_run_open(const char* config_path, odenet_run** out);
ODENET_API odenet_status odenet_run_set_seed(odenet_run* run, uint64_t seed);
ODENET_API odenet_status odenet_run_set_output(odenet_run* run, const char* dir);
ODENET_API odenet_status odenet_run_set_mode(odenet_run* run, const char* mode);
ODENET_API odenet_status odenet_run_set_threads(odenet_run* run, int threads);
ODENET_API void odenet_run_set_log(odenet_run* run, odenet_log_fn fn, void* user);
/* verb: generate | fit | simulate | compare | report. summary may be NULL. */
ODENET_API odenet_status odenet_run_execute(odenet_run* run, const char* verb, char** summary);
ODENET_API void odenet_run_close(odenet_run* run);

/* Runs a recipe (file path, or id looked up in recipe_dir). *passed is 1 or 0;
   a failed check returns ODENET_ERROR_RECIPE_FAILED. */
ODENET_API odenet_status odenet_recipe_run(const char* recipe, const char* recipe_dir, const char* out_dir,
                                           odenet_log_fn fn, void* user, int* passed, char** summary);

typedef struct odenet_model odenet_model;

ODENET_API odenet_status odenet_model_load(const char* path, odenet_model** out);
ODENET_API odenet_status odenet_model_from_json(const char* json, odenet_model** out);
ODENET_API int odenet_model_dimension(const odenet_model* model);
ODENET_API size_t odenet_model_active_terms(const odenet_model* model);
/* dxdt receives dimension() values. */
ODENET_API odenet_status odenet_model_rhs(const odenet_model* model, const double* x, double* dxdt);
ODENET_API odenet_status odenet_model_equations(const odenet_model* model, char** text);
/* Integrates from x0 at times[0]; out receives (count - 1) * dimension()
   values, row-major, for times[1..]. */
ODENET_API odenet_status odenet_model_simulate(const odenet_model* model, const double* x0, const double* times,
                                               size_t count, double* out);
ODENET_API void odenet_model_free(odenet_model* model);

#ifdef __cplusplus
}
#endif

#endif
