/* Copyright 2026 The jumprev Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to jumprev: opaque handles and status codes.  Every function
 * that can fail returns a jr_status; the message of the last failure on the
 * calling thread is available from jr_last_message().
 */

#ifndef JUMPREV_JUMPREV_H_
#define JUMPREV_JUMPREV_H_

#include <stddef.h>
#include <stdint.h>

#if defined(JUMPREV_BUILDING_LIBRARY)
#define JR_API __attribute__((visibility("default")))
#else
#define JR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values double as CLI exit codes. */
typedef enum jr_status {
  JR_OK = 0,
  JR_ERROR = 1,          /* internal error */
  JR_CONFIG_ERROR = 2,   /* invalid configuration, I/O or argument */
  JR_MATH_ERROR = 3,     /* violated mathematical precondition */
  JR_VERIFY_FAIL = 4     /* verification verdict FAIL */
} jr_status;

typedef struct jr_config jr_config;
typedef struct jr_ensemble jr_ensemble;

/* Last error on this thread: status and message ("" if none). */
JR_API jr_status jr_last_error(void);
JR_API const char* jr_last_message(void);

JR_API const char* jr_version(void);

/* Configurations. */
JR_API jr_status jr_config_from_file(const char* path, jr_config** out);
JR_API jr_status jr_config_from_string(const char* text, jr_config** out);
JR_API jr_status jr_config_from_demo(const char* name, jr_config** out);
JR_API jr_status jr_config_set_seed(jr_config* cfg, uint64_t seed);
JR_API jr_status jr_config_set_threads(jr_config* cfg, int threads);
JR_API jr_status jr_config_set_n_paths(jr_config* cfg, size_t n_paths);
JR_API void jr_config_free(jr_config* cfg);

/* Bundled demo presets. */
JR_API size_t jr_demo_count(void);
JR_API const char* jr_demo_name(size_t index);

/* Commands: files go to out_dir, progress and the verdict line to stdout,
 * diagnostics to stderr.  jr_run_demo runs the configuration's pipeline. */
JR_API jr_status jr_run_simulate(const jr_config* cfg, const char* out_dir);
JR_API jr_status jr_run_marginals(const jr_config* cfg, const char* out_dir);
JR_API jr_status jr_run_reverse(const jr_config* cfg, const char* out_dir);
JR_API jr_status jr_run_verify(const jr_config* cfg, const char* out_dir);
JR_API jr_status jr_run_entropy(const jr_config* cfg, const char* out_dir);
JR_API jr_status jr_run_demo(const jr_config* cfg, const char* out_dir);

/* Ensembles. */
JR_API jr_status jr_ensemble_simulate(const jr_config* cfg, jr_ensemble** out);
JR_API jr_status jr_ensemble_read(const jr_config* cfg, const char* path, jr_ensemble** out);
JR_API jr_status jr_ensemble_write(const jr_ensemble* ens, const char* path);
JR_API jr_status jr_ensemble_reverse(const jr_ensemble* ens, jr_ensemble** out);
JR_API size_t jr_ensemble_size(const jr_ensemble* ens);
JR_API int jr_ensemble_dimension(const jr_ensemble* ens);
/* Writes the state of path `index` at time t into out[0..dimension-1]. */
JR_API jr_status jr_ensemble_state_at(const jr_ensemble* ens, size_t index, double t, double* out);
JR_API void jr_ensemble_free(jr_ensemble* ens);

/* h(a) = a log a - a + 1 (1 at a = 0, +inf for a < 0) and
 * theta(a) = h(|a| + 1). */
JR_API double jr_entropy_h(double a);
JR_API double jr_young_theta(double a);

#ifdef __cplusplus
}
#endif

#endif /* JUMPREV_JUMPREV_H_ */
