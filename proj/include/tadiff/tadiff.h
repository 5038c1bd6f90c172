/* SPDX-License-Identifier: Apache-2.0 */
#ifndef TADIFF_TADIFF_H
#define TADIFF_TADIFF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TADIFF_API __declspec(dllexport)
#else
#define TADIFF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tadiff_status {
  TADIFF_OK = 0,
  TADIFF_ERR_CONFIG = 1,   /* invalid configuration or argument */
  TADIFF_ERR_DATA = 2,     /* unreadable, malformed or inconsistent data */
  TADIFF_ERR_INTERNAL = 3  /* bug or resource exhaustion */
} tadiff_status;

typedef struct tadiff_config tadiff_config;
typedef struct tadiff_report tadiff_report;
typedef struct tadiff_model tadiff_model;

/* Called once per finished epoch or training run with a one-line message. */
typedef void (*tadiff_progress_fn)(const char* line, void* user);

TADIFF_API const char* tadiff_version(void);

/* Message of the most recent failure on the calling thread; never NULL. */
TADIFF_API const char* tadiff_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
TADIFF_API void tadiff_string_free(char* s);

/* Configuration */
TADIFF_API tadiff_status tadiff_config_default(tadiff_config** out);
TADIFF_API tadiff_status tadiff_config_parse(const char* json, tadiff_config** out);
TADIFF_API tadiff_status tadiff_config_load(const char* path, tadiff_config** out);
TADIFF_API void tadiff_config_free(tadiff_config* cfg);
TADIFF_API tadiff_status tadiff_config_to_json(const tadiff_config* cfg, char** out);
TADIFF_API tadiff_status tadiff_config_set_seed(tadiff_config* cfg, uint64_t seed);
TADIFF_API tadiff_status tadiff_config_set_protocol(tadiff_config* cfg, const char* protocol);
/* Enables or disables both refiner stages (noise injection and denoising). */
TADIFF_API tadiff_status tadiff_config_set_tadiff(tadiff_config* cfg, int enabled);
TADIFF_API tadiff_status tadiff_config_set_steps(tadiff_config* cfg, size_t steps);
TADIFF_API tadiff_status tadiff_config_set_output(tadiff_config* cfg, const char* dir);
TADIFF_API tadiff_status tadiff_config_set_data_dir(tadiff_config* cfg, const char* dir);
TADIFF_API tadiff_status tadiff_config_get_output(const tadiff_config* cfg, char** dir);

/* Experiments */
TADIFF_API tadiff_status tadiff_gen_data(const tadiff_config* cfg, char** summary);
/* resume_checkpoint may be NULL. checkpoint_path may be NULL. */
TADIFF_API tadiff_status tadiff_train(const tadiff_config* cfg, const char* resume_checkpoint,
                                      tadiff_progress_fn progress, void* user, char** checkpoint_path);
TADIFF_API tadiff_status tadiff_eval(const tadiff_config* cfg, const char* checkpoint, tadiff_report** out);
TADIFF_API tadiff_status tadiff_ablate(const tadiff_config* cfg, tadiff_progress_fn progress, void* user,
                                       char** table_csv);
TADIFF_API tadiff_status tadiff_sweep_steps(const tadiff_config* cfg, size_t from, size_t to,
                                            tadiff_progress_fn progress, void* user, char** table_csv);
TADIFF_API tadiff_status tadiff_report_dir(const char* run_dir, char** text);

/* Evaluation reports */
TADIFF_API void tadiff_report_free(tadiff_report* report);
/* Header line plus one row. */
TADIFF_API tadiff_status tadiff_report_csv(const tadiff_report* report, char** csv);
TADIFF_API tadiff_status tadiff_report_json(const tadiff_report* report, char** json);
/* Names: ap75 ap85 ap95 ap_avg ar1 ar5 ar10 ar_avg fisher fisher_before. */
TADIFF_API tadiff_status tadiff_report_metric(const tadiff_report* report, const char* name, double* value);

/* Inference */
TADIFF_API tadiff_status tadiff_model_load(const char* checkpoint, tadiff_model** out);
TADIFF_API void tadiff_model_free(tadiff_model* model);
/* Proposals for one feature file as a JSON array of {start_sec, end_sec, score}. */
TADIFF_API tadiff_status tadiff_model_predict(const tadiff_model* model, const char* feature_file, double fps,
                                              char** proposals_json);

#ifdef __cplusplus
}
#endif

#endif /* TADIFF_TADIFF_H */
