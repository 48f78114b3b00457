#ifndef ILA_H
#define ILA_H

/* C interface to the landmark attention library.
 *
 * Every call returns an ila_status. On failure ila_last_error() describes
 * the problem (thread-local, valid until the next call on the thread).
 * Strings returned through char** are owned by the caller and released
 * with ila_string_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define ILA_API __declspec(dllexport)
#else
#define ILA_API __attribute__((visibility("default")))
#endif

typedef enum ila_status {
  ILA_OK = 0,
  ILA_ERR_INVALID = 1,
  ILA_ERR_CONFIG = 2,
  ILA_ERR_RUNTIME = 3,
  ILA_ERR_INFEASIBLE = 4,
  ILA_ERR_DEGENERATE = 5,
  ILA_ERR_BEHIND_CAMERA = 6,
  ILA_ERR_ESTIMATION = 7,
  ILA_ERR_TOO_LARGE = 8,
  ILA_ERR_IO = 9
} ila_status;

typedef struct ila_config ila_config;
typedef struct ila_run ila_run;

ILA_API const char* ila_last_error(void);
ILA_API void ila_string_free(char* s);
ILA_API const char* ila_version(void);

/* Scenario configuration. */
ILA_API ila_status ila_config_default(ila_config** out);
ILA_API ila_status ila_config_parse(const char* json, ila_config** out);
ILA_API ila_status ila_config_load(const char* path, ila_config** out);
ILA_API void ila_config_free(ila_config* cfg);
ILA_API ila_status ila_config_set_seed(ila_config* cfg, uint64_t seed);
ILA_API ila_status ila_config_seed(const ila_config* cfg, uint64_t* out);
ILA_API ila_status ila_config_set_alert_limit(ila_config* cfg, double meters);
ILA_API ila_status ila_config_set_gamma(ila_config* cfg, double gamma);
ILA_API ila_status ila_config_set_beta(ila_config* cfg, double beta);
ILA_API ila_status ila_config_to_json(const ila_config* cfg, char** out);
ILA_API ila_status ila_config_digest(const ila_config* cfg, char** out);

/* Closed-loop run of the proposed selection on one seed. */
ILA_API ila_status ila_simulate(const ila_config* cfg, ila_run** out);
ILA_API void ila_run_free(ila_run* run);
ILA_API ila_status ila_run_epochs_csv(const ila_run* run, char** out);
ILA_API ila_status ila_run_selection_jsonl(const ila_run* run, char** out);
ILA_API ila_status ila_run_summary_json(const ila_run* run, char** out);
/* aggregate.json over n runs: mean and max of the summary metrics. */
ILA_API ila_status ila_runs_aggregate_json(const ila_run* const* runs, size_t n, char** out);

/* Baseline comparison CSV. `baselines` is comma separated, from
 * ila, gps_only, all, random. */
ILA_API ila_status ila_compare(const ila_config* cfg, const char* baselines, int random_runs, char** out);

/* One-shot selection on a snapshot document; SelectionResult JSON. */
ILA_API ila_status ila_select(const char* snapshot_json, const ila_config* cfg, char** out);
/* Snapshot of one epoch of the configured scenario. A non-NULL plant_id
 * adds plant_bias_m to that satellite's pseudorange. */
ILA_API ila_status ila_snapshot(const ila_config* cfg, int epoch, const char* plant_id, double plant_bias_m,
                                char** out);

/* Set operations on {"c","G","Sigma"} documents. */
ILA_API ila_status ila_set_sum(const char* a, const char* b, char** out);
ILA_API ila_status ila_set_union(const char* const* sets, size_t n, char** out);
ILA_API ila_status ila_set_cut(const char* set, double gamma, char** out);
ILA_API ila_status ila_set_fault_status(const char* set, const double* point, size_t dim, double* out);

#ifdef __cplusplus
}
#endif

#endif
