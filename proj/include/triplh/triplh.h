/*
 * C interface to the TriplH training and evaluation toolkit.
 *
 * Objects are opaque handles created by the library and released with the
 * matching *_free function. Every fallible call returns a triplh_status; on
 * failure a description of the most recent error on the calling thread is
 * available from triplh_last_error(). Strings returned through char** out
 * parameters are owned by the caller and released with triplh_string_free().
 */
#ifndef TRIPLH_H
#define TRIPLH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TRIPLH_API __declspec(dllexport)
#else
#define TRIPLH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum triplh_status {
  TRIPLH_OK = 0,
  TRIPLH_ERR_USAGE = 1,    /* bad argument, config or index */
  TRIPLH_ERR_DATA = 2,     /* unreadable or malformed file */
  TRIPLH_ERR_TRAINING = 3, /* optimization diverged */
  TRIPLH_ERR_INTERNAL = 4
} triplh_status;

typedef struct triplh_dataset triplh_dataset;
typedef struct triplh_model triplh_model;

typedef struct triplh_dataset_stats {
  uint64_t n_users;
  uint64_t n_items;
  uint64_t n_actions;
  uint64_t n_train;
  uint64_t n_validation;
  uint64_t n_test;
  double avg_length;
  double avg_train_length;
  uint64_t duplicates_removed; /* only meaningful right after triplh_dataset_from_raw */
  uint64_t dropped_users;
} triplh_dataset_stats;

/* Receives one line-delimited JSON record per finished epoch. */
typedef void (*triplh_epoch_fn)(const char* json_line, void* user_data);

TRIPLH_API const char* triplh_last_error(void);
TRIPLH_API const char* triplh_version(void);
TRIPLH_API void triplh_string_free(char* s);

/* format: "movielens" ("::"-separated) or "csv" (user,item,rating,timestamp). */
TRIPLH_API triplh_status triplh_dataset_from_raw(const char* path, const char* format,
                                                 triplh_dataset** out);
/* Planted cluster dataset. params_json may be NULL; keys: n_users, n_items,
 * n_clusters, interactions_per_user, noise, seed. */
TRIPLH_API triplh_status triplh_dataset_planted(const char* params_json, triplh_dataset** out);
/* Writes the planted interactions as a user,item,rating,timestamp CSV. */
TRIPLH_API triplh_status triplh_planted_write_csv(const char* params_json, const char* path);
TRIPLH_API triplh_status triplh_dataset_save(const triplh_dataset* ds, const char* path);
TRIPLH_API triplh_status triplh_dataset_load(const char* path, triplh_dataset** out);
TRIPLH_API triplh_status triplh_dataset_stats_get(const triplh_dataset* ds,
                                                  triplh_dataset_stats* out);
TRIPLH_API void triplh_dataset_free(triplh_dataset* ds);

/* Checks a flat JSON run config (unknown keys rejected) and returns it with
 * every default filled in. */
TRIPLH_API triplh_status triplh_config_normalize(const char* config_json, int require_dataset,
                                                 char** normalized_json);

/* Trains on ds. On TRIPLH_ERR_TRAINING *out still receives the last good
 * checkpoint. on_epoch may be NULL. */
TRIPLH_API triplh_status triplh_train(const triplh_dataset* ds, const char* config_json,
                                      triplh_epoch_fn on_epoch, void* user_data,
                                      triplh_model** out);
/* Untrained model exactly as training would initialize it. */
TRIPLH_API triplh_status triplh_model_init(const triplh_dataset* ds, const char* config_json,
                                           triplh_model** out);
TRIPLH_API triplh_status triplh_model_save(const triplh_model* m, const char* path);
TRIPLH_API triplh_status triplh_model_load(const char* path, triplh_model** out);
TRIPLH_API triplh_status triplh_model_shape(const triplh_model* m, uint64_t* n_users,
                                            uint64_t* n_items, uint64_t* dim);
TRIPLH_API triplh_status triplh_model_score(const triplh_model* m, uint64_t user, uint64_t item,
                                            double* out);
TRIPLH_API void triplh_model_free(triplh_model* m);

/* Full-catalog test evaluation. options_json may be NULL; keys: coverage
 * (bool), head_mass, tail_mass. Returns the report as JSON. */
TRIPLH_API triplh_status triplh_evaluate(const triplh_model* m, const triplh_dataset* ds,
                                         const char* options_json, char** report_json);
/* Positive/negative score histogram as CSV plus the separation statistic. */
TRIPLH_API triplh_status triplh_score_histogram(const triplh_model* m, const triplh_dataset* ds,
                                                uint64_t bins, uint64_t seed, char** csv,
                                                double* separation);
/* Per-item popularity bin table as CSV (item,token,train_count,bin). */
TRIPLH_API triplh_status triplh_popularity_csv(const triplh_dataset* ds, double head_mass,
                                               double tail_mass, char** csv);

TRIPLH_API triplh_status triplh_bench(uint64_t dim, uint64_t n_pairs, uint64_t repetitions,
                                      uint64_t seed, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* TRIPLH_H */
