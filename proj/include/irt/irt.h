/* C interface to the IRT coreset library. Every call returns an irt_status;
 * on failure irt_last_error() describes the problem (thread-local, valid
 * until the next failing call on the same thread). Handles are opaque and
 * released with the matching *_free function, which accepts NULL. */
#ifndef IRT_IRT_H
#define IRT_IRT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(IRT_BUILDING_LIBRARY)
#define IRT_API __attribute__((visibility("default")))
#else
#define IRT_API
#endif

typedef enum irt_status {
  IRT_OK = 0,
  IRT_ERR_INVALID_ARGUMENT = 1,
  IRT_ERR_DIMENSION = 2,
  IRT_ERR_DEGENERATE_SCALE = 3,
  IRT_ERR_DEGENERATE_LABELS = 4,
  IRT_ERR_UNDEFINED_COMPLEXITY = 5,
  IRT_ERR_EMPTY_CORESET = 6,
  IRT_ERR_CONFIG = 7,
  IRT_ERR_IO = 8,
  IRT_ERR_NUMERIC = 9,
  IRT_ERR_INTERNAL = 10
} irt_status;

typedef struct irt_dataset irt_dataset;
typedef struct irt_coreset irt_coreset;
typedef struct irt_fit irt_fit;
typedef struct irt_report irt_report;

IRT_API const char* irt_version(void);
IRT_API const char* irt_last_error(void);
IRT_API const char* irt_status_name(irt_status status);

/* Datasets. `model` is "1pl", "2pl" or "3pl"; `labels` is "pm1" or "01". */
IRT_API irt_status irt_dataset_generate(size_t n, size_t m, const char* model, uint64_t seed,
                                        irt_dataset** out);
IRT_API irt_status irt_dataset_from_labels(size_t m, size_t n, const int8_t* labels,
                                           irt_dataset** out);
IRT_API irt_status irt_dataset_load(const char* path, const char* labels, irt_dataset** out);
IRT_API irt_status irt_dataset_save(const irt_dataset* data, const char* path, int dense,
                                    const char* labels);
/* Writes items_true.csv and abilities_true.csv into dir (synthetic data only). */
IRT_API irt_status irt_dataset_save_truth(const irt_dataset* data, const char* dir);
IRT_API irt_status irt_dataset_dims(const irt_dataset* data, size_t* m, size_t* n);
IRT_API void irt_dataset_free(irt_dataset* data);

/* Subsamples of examinees. `method`: coreset, uniform, distance, l1lev, lewis. */
IRT_API irt_status irt_coreset_build(const irt_dataset* data, const char* model, const char* method,
                                     size_t k, uint64_t seed, int sketched, int rounds,
                                     irt_coreset** out);
IRT_API irt_status irt_coreset_size(const irt_coreset* coreset, size_t* distinct, size_t* forced);
IRT_API irt_status irt_coreset_save(const irt_coreset* coreset, const char* path);
IRT_API void irt_coreset_free(irt_coreset* coreset);

/* Alternating maximum likelihood; `coreset` may be NULL for a full fit. */
IRT_API irt_status irt_fit_run(const irt_dataset* data, const irt_coreset* coreset, const char* model,
                               int iterations, irt_fit** out);
/* Copies up to `capacity` trace values; *count receives the trace length. */
IRT_API irt_status irt_fit_trace(const irt_fit* fit, double* values, size_t capacity, size_t* count);
/* Standardized parameters; any output pointer may be NULL. */
IRT_API irt_status irt_fit_parameters(const irt_fit* fit, double* a, double* b, double* c,
                                      double* theta);
IRT_API irt_status irt_fit_full_objective(const irt_dataset* data, const irt_fit* fit, double* out);
IRT_API irt_status irt_fit_seconds(const irt_fit* fit, double* total);
/* Writes items.csv, abilities.csv (standardized) and trace.csv into dir. */
IRT_API irt_status irt_fit_save(const irt_fit* fit, const char* dir);
IRT_API void irt_fit_free(irt_fit* fit);

/* Per-item mu table at a fitted optimum, written as CSV when path is not NULL.
 * `policy`: auto, heuristic or exact. */
IRT_API irt_status irt_mu_table(const irt_dataset* data, const irt_fit* fit, const char* policy,
                                const char* path, double* median_mu0, double* median_mu1,
                                size_t* degenerate_items);

/* Experiments driven by a JSON config (schema 1). `data` may be NULL. */
IRT_API irt_status irt_experiment_run(const irt_dataset* data, const char* config_json,
                                      irt_report** out);
IRT_API irt_status irt_report_load(const char* path, irt_report** out);
IRT_API const char* irt_report_json(const irt_report* report);
/* Human-readable summary table. */
IRT_API const char* irt_report_text(const irt_report* report);
IRT_API irt_status irt_report_summary(const irt_report* report, const char* method, double* rel_err,
                                      double* mad_theta, double* gain_percent);
IRT_API void irt_report_free(irt_report* report);

#ifdef __cplusplus
}
#endif

#endif /* IRT_IRT_H */
