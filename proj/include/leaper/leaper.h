#ifndef LEAPER_LEAPER_H
#define LEAPER_LEAPER_H

/* C interface to the leaper toolkit. Every handle is opaque and owned by the
 * caller; release it with the matching *_free function. Strings returned
 * through char** parameters are heap allocated and must be released with
 * leaper_string_free. On failure a call returns a non-zero status and
 * leaper_last_error() describes it (per thread, until the next call). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(LEAPER_BUILDING_LIBRARY)
#    define LEAPER_API __declspec(dllexport)
#  else
#    define LEAPER_API __declspec(dllimport)
#  endif
#else
#  define LEAPER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum leaper_status {
  LEAPER_OK = 0,
  LEAPER_ERR_VALIDATION = 1, /* bad input, precondition violated */
  LEAPER_ERR_IO = 2,         /* file could not be read or written */
  LEAPER_ERR_INTERNAL = 3
} leaper_status;

typedef struct leaper_space leaper_space;
typedef struct leaper_plan leaper_plan;
typedef struct leaper_env leaper_env;
typedef struct leaper_dataset leaper_dataset;
typedef struct leaper_model leaper_model;

LEAPER_API const char* leaper_version(void);
LEAPER_API const char* leaper_last_error(void);
LEAPER_API void leaper_string_free(char* s);

/* 0 restores the default (LEAPER_THREADS, then hardware concurrency). */
LEAPER_API void leaper_set_threads(unsigned n);

/* Configuration spaces */
LEAPER_API leaper_status leaper_space_load(const char* path, leaper_space** out);
LEAPER_API leaper_status leaper_space_parse(const char* json, leaper_space** out);
/* Placeholder space inferred from the option columns of dataset CSV files. */
LEAPER_API leaper_status leaper_space_infer(const char* const* csv_paths, size_t n,
                                            leaper_space** out);
LEAPER_API uint64_t leaper_space_cardinality(const leaper_space* space);
LEAPER_API void leaper_space_free(leaper_space* space);

/* Latin hypercube plans */
LEAPER_API leaper_status leaper_doe_lhs(const leaper_space* space, int64_t n, uint64_t seed,
                                        leaper_plan** out);
LEAPER_API leaper_status leaper_plan_load(const leaper_space* space, const char* path,
                                          leaper_plan** out);
LEAPER_API leaper_status leaper_plan_to_json(const leaper_plan* plan, char** out);
LEAPER_API size_t leaper_plan_size(const leaper_plan* plan);
LEAPER_API void leaper_plan_free(leaper_plan* plan);

/* Synthetic environments. The parameter file may be a generator spec or a
 * fully resolved sidecar; see leaper_env_to_json for the latter. */
LEAPER_API leaper_status leaper_env_load(const leaper_space* space, const char* path,
                                         leaper_env** out);
LEAPER_API leaper_status leaper_env_related(const leaper_space* space, const leaper_env* source,
                                            double rho, double gamma, uint64_t seed,
                                            leaper_env** out);
LEAPER_API leaper_status leaper_env_to_json(const leaper_env* env, char** out);
/* plan may be NULL to label the whole space. */
LEAPER_API leaper_status leaper_env_generate(const leaper_space* space, const leaper_env* env,
                                             const leaper_plan* plan, const char* env_id,
                                             leaper_dataset** out);
LEAPER_API void leaper_env_free(leaper_env* env);

/* Datasets */
LEAPER_API leaper_status leaper_dataset_read(const leaper_space* space, const char* path,
                                             leaper_dataset** out);
LEAPER_API leaper_status leaper_dataset_write(const leaper_dataset* dataset, const char* path);
LEAPER_API leaper_status leaper_dataset_to_csv(const leaper_dataset* dataset, char** out);
LEAPER_API size_t leaper_dataset_size(const leaper_dataset* dataset);
LEAPER_API void leaper_dataset_free(leaper_dataset* dataset);

/* Models */
typedef struct leaper_train_options {
  const char* metric; /* exec_ms, bram, dsp, ff, lut (or exec_time_ms, ...) */
  size_t folds;
  size_t k_features;
  uint64_t seed;
  /* Hyperparameter grid JSON file, {"forests": [...], "boosting": [...]};
   * NULL uses the default grid. */
  const char* grid_path;
} leaper_train_options;

LEAPER_API void leaper_train_options_init(leaper_train_options* options);
LEAPER_API leaper_status leaper_train_base(const leaper_dataset* data,
                                           const leaper_train_options* options,
                                           leaper_model** out);

typedef struct leaper_transfer_options {
  size_t iterations;
  uint64_t seed;
  const leaper_dataset* holdout; /* NULL: leave-one-out on the shots */
} leaper_transfer_options;

LEAPER_API void leaper_transfer_options_init(leaper_transfer_options* options);
LEAPER_API leaper_status leaper_transfer(const leaper_model* base, const leaper_dataset* shots,
                                         const leaper_dataset* source_doe,
                                         const leaper_transfer_options* options,
                                         leaper_model** out);

LEAPER_API leaper_status leaper_model_load(const char* path, leaper_model** out);
LEAPER_API leaper_status leaper_model_save(const leaper_model* model, const char* path);
LEAPER_API leaper_status leaper_model_to_json(const leaper_model* model, char** out);
/* Copy of the space the model was trained on. */
LEAPER_API leaper_status leaper_model_space(const leaper_model* model, leaper_space** out);
/* Newline-separated warnings raised while fitting; empty string if none. */
LEAPER_API leaper_status leaper_model_warnings(const leaper_model* model, char** out);
LEAPER_API void leaper_model_free(leaper_model* model);

/* Predictions as CSV: row,predicted_<metric> */
LEAPER_API leaper_status leaper_predict_csv(const leaper_model* model,
                                            const leaper_dataset* data, char** out);
LEAPER_API leaper_status leaper_predict(const leaper_model* model, const leaper_dataset* data,
                                        double* values, size_t capacity);
/* {"mre": f, "accuracy_pct": f, "n": i} */
LEAPER_API leaper_status leaper_evaluate(const leaper_model* model, const leaper_dataset* data,
                                         char** out);

/* {"jsd": f, "pearson": f|null, "bins": n}; warnings may be NULL. */
LEAPER_API leaper_status leaper_relatedness(const leaper_dataset* a, const leaper_dataset* b,
                                            const char* metric, size_t bins, char** out,
                                            char** warnings);

#ifdef __cplusplus
}
#endif

#endif
