/* Copyright 2026 The POTEC Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the POTEC library. Objects are opaque handles; every
 * fallible call returns a status and leaves a message for potec_last_error()
 * on the calling thread. */

#ifndef POTEC_POTEC_H
#define POTEC_POTEC_H

#include <stddef.h>
#include <stdint.h>

#if defined(POTEC_BUILDING_LIBRARY)
#define POTEC_API __attribute__((visibility("default")))
#else
#define POTEC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum potec_status {
  POTEC_OK = 0,
  POTEC_ERR_CONFIG = 1,      /* invalid configuration or inputs */
  POTEC_ERR_CONTRACT = 2,    /* API misuse: null handle, wrong sizes */
  POTEC_ERR_NUMERIC = 3,     /* non-finite values */
  POTEC_ERR_DIVISION = 4,    /* zero propensity in an importance weight */
  POTEC_ERR_UNSUPPORTED = 5, /* operation not available in this mode */
  POTEC_ERR_IO = 6,
  POTEC_ERR_INTERNAL = 99
} potec_status;

POTEC_API const char* potec_version(void);
POTEC_API const char* potec_status_name(potec_status status);
/* Message of the last failed call on this thread; empty after success. */
POTEC_API const char* potec_last_error(void);
/* Frees strings returned through char** out-parameters. */
POTEC_API void potec_string_free(char* text);

/* ---- experiment configuration ---- */

typedef struct potec_config potec_config;

/* Commented JSON template with every default. */
POTEC_API potec_status potec_config_template(char** out_text);
POTEC_API potec_status potec_config_parse(const char* text, potec_config** out);
POTEC_API potec_status potec_config_load(const char* path, potec_config** out);
POTEC_API void potec_config_destroy(potec_config* config);

POTEC_API potec_status potec_config_set_seeds(potec_config* config, size_t n_seeds);
POTEC_API potec_status potec_config_set_jobs(potec_config* config, size_t jobs);
/* Comma-separated method names. */
POTEC_API potec_status potec_config_set_methods(potec_config* config, const char* methods);
POTEC_API potec_status potec_config_shape(const potec_config* config, size_t* n_values,
                                          size_t* n_seeds, size_t* n_methods);

/* ---- sweeps ---- */

typedef void (*potec_progress_fn)(const char* line, void* user);

/* Runs the sweep and writes out_dir/results.csv. n_failed counts rows whose
 * method failed; those rows are still written. */
POTEC_API potec_status potec_sweep_run(const potec_config* config, const char* out_dir,
                                       potec_progress_fn progress, void* user, size_t* n_rows,
                                       size_t* n_failed);

/* Mean normalized value and percentile bootstrap interval per (method, value). */
POTEC_API potec_status potec_summarize_file(const char* results_csv, const char* summary_csv,
                                            double confidence, size_t n_resamples, uint64_t seed,
                                            size_t* n_groups);

/* ---- self-checks ---- */

typedef struct potec_check {
  int id;
  const char* name;
  int passed;
  const char* detail;
  double seconds;
} potec_check;

typedef void (*potec_check_fn)(const potec_check* check, void* user);

/* Exact-oracle and Monte-Carlo checks of the estimators. quick != 0 uses
 * fewer replications. */
POTEC_API potec_status potec_verify(int quick, uint64_t seed, potec_check_fn on_check, void* user,
                                    size_t* n_failed);

/* Finite-difference check of network gradients and policy scores. */
POTEC_API potec_status potec_gradcheck(size_t n_cases, uint64_t seed, size_t* n_checked,
                                       size_t* n_failed, double* max_rel_error);

/* ---- synthetic environments ---- */

typedef struct potec_env potec_env;

/* env_json is an object with the keys of the config "env" section; NULL uses
 * the defaults. */
POTEC_API potec_status potec_env_create(const char* env_json, uint64_t seed, potec_env** out);
POTEC_API void potec_env_destroy(potec_env* env);
POTEC_API potec_status potec_env_shape(const potec_env* env, size_t* n_actions, size_t* n_clusters,
                                       size_t* context_dim);
POTEC_API potec_status potec_env_expected_rewards(const potec_env* env, const double* x, size_t dim,
                                                  double* out, size_t n_actions);
POTEC_API potec_status potec_env_logging_probs(const potec_env* env, const double* x, size_t dim,
                                               double* out, size_t n_actions);
/* Samples n logged records and writes them as CSV. */
POTEC_API potec_status potec_env_sample_csv(const potec_env* env, size_t n, uint64_t seed,
                                            size_t repeats_per_context, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* POTEC_POTEC_H */
