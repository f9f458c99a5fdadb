/*
 * smldist — stage/memory/logits distillation toolkit for lightweight 1-D
 * convolutional activity-recognition models.
 *
 * C API over the shared library. All entry points are thread-compatible
 * (no shared mutable state beyond a thread-local error message); a config
 * handle must not be used from two threads at once.
 */
#ifndef SMLDIST_H
#define SMLDIST_H

#include <stddef.h>

#ifdef _WIN32
#define SMLD_API __declspec(dllexport)
#else
#define SMLD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum smld_status {
  SMLD_OK = 0,
  SMLD_ERROR = 1,         /* unexpected failure */
  SMLD_ERROR_CONFIG = 2,  /* configuration problem */
  SMLD_ERROR_DATA = 3,    /* data or shape problem */
  SMLD_ERROR_NUMERIC = 4  /* numeric failure (non-finite loss) */
} smld_status;

/* Opaque run configuration (parsed TOML plus overrides). */
typedef struct smld_config smld_config;

SMLD_API const char* smld_version(void);

/* Message for the most recent failure on this thread; never NULL. */
SMLD_API const char* smld_last_error(void);

SMLD_API smld_status smld_config_open(const char* toml_path, smld_config** out);
SMLD_API smld_status smld_config_default(smld_config** out);

/* Override a single dotted key, e.g. ("run.seed", "7") or
 * ("distill.enable_stage", "false"). The value is parsed as a TOML literal
 * and falls back to a plain string. */
SMLD_API smld_status smld_config_set(smld_config* cfg, const char* key, const char* value);

SMLD_API void smld_config_close(smld_config* cfg);

/* Commands. Artifacts are written under the configured output directory.
 * When report_json is non-NULL it receives a malloc'd JSON document that the
 * caller releases with smld_free_string. */
SMLD_API smld_status smld_run_synth(smld_config* cfg, char** report_json);
SMLD_API smld_status smld_run_teach(smld_config* cfg, char** report_json);
SMLD_API smld_status smld_run_distill(smld_config* cfg, char** report_json);
SMLD_API smld_status smld_run_sweep(smld_config* cfg, char** report_json);

/* Evaluates a checkpoint against a CSV dataset. out_dir may be NULL or empty
 * to skip writing eval_report.json. */
SMLD_API smld_status smld_run_eval(const char* checkpoint_path, const char* dataset_csv,
                                   const char* out_dir, char** report_json);

SMLD_API void smld_free_string(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SMLDIST_H */
