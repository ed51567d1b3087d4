#ifndef DUNKL_C_H
#define DUNKL_C_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes for the command-line runner. */
typedef enum {
  DUNKL_OK = 0,
  DUNKL_GATE_FAILED = 1,
  DUNKL_INVALID_ARGUMENT = 2,
  DUNKL_PRECONDITION = 3,
  DUNKL_UNSUPPORTED = 4,
  DUNKL_CAP_EXCEEDED = 5,
  DUNKL_NOT_CONVERGED = 6,
  DUNKL_CONFIG = 7,
  DUNKL_UNRESOLVED_NAME = 8,
  DUNKL_IO = 9,
  DUNKL_NUMERIC = 10,
  DUNKL_INTERNAL = 11
} dunkl_status;

typedef struct dunkl_config dunkl_config;
typedef struct dunkl_run dunkl_run;

/* Message of the last failing call on this thread; empty when it succeeded. */
const char* dunkl_last_error(void);
const char* dunkl_status_name(int status);

int dunkl_config_load(const char* path, dunkl_config** out);
int dunkl_config_parse(const char* json_text, dunkl_config** out);
dunkl_config* dunkl_config_default(void);
void dunkl_config_free(dunkl_config* cfg);
uint64_t dunkl_config_seed(const dunkl_config* cfg);
const char* dunkl_config_output_dir(const dunkl_config* cfg);

size_t dunkl_suite_count(void);
const char* dunkl_suite_name(size_t i); /* in the order "all" runs them; NULL past the end */

/* Runs one suite, or every suite for "all". The returned status is DUNKL_OK even when gates fail; query
   dunkl_run_passed for the verdict. */
int dunkl_run_suite(const dunkl_config* cfg, const char* suite, int jobs, uint64_t seed, dunkl_run** out);
void dunkl_run_free(dunkl_run* run);

int dunkl_run_passed(const dunkl_run* run);
size_t dunkl_run_gate_count(const dunkl_run* run);
/* name and detail stay valid until the run is freed; any out pointer may be NULL */
int dunkl_run_gate(const dunkl_run* run, size_t i, const char** suite, const char** name, int* pass, double* value,
                   double* threshold);

/* Writes every CSV report and summary.json into dir, creating it if needed. */
int dunkl_run_write(const dunkl_run* run, const char* dir);
const char* dunkl_run_summary_json(const dunkl_run* run);

#ifdef __cplusplus
}
#endif

#endif
