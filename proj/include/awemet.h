/* SPDX-License-Identifier: Apache-2.0 */
/*
 * awemet — joint acoustic / written word embedding trainer, C interface.
 *
 * Every entry point returns awemet_status; nonzero codes match the CLI
 * exit codes. On failure, awemet_last_error() returns a thread-local
 * message describing what went wrong. Matrix arguments are column-major
 * with one column per frame.
 */
#ifndef AWEMET_H
#define AWEMET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum awemet_status {
  AWEMET_OK = 0,
  AWEMET_ERR_USAGE = 2,   /* bad arguments or malformed config */
  AWEMET_ERR_NUMERIC = 3, /* audit failure, divergence, undefined metric */
  AWEMET_ERR_IO = 4,      /* file problems, format/version mismatches */
  AWEMET_ERR_INTERNAL = 5
} awemet_status;

const char* awemet_version(void);

/* Message from the most recent failing call on this thread; empty string
 * after a success. The pointer stays valid until the next call. */
const char* awemet_last_error(void);

/* Worker threads for data generation, encoding and evaluation. n <= 0
 * restores the default resolution (AWEMET_WORKERS env var, else 1).
 * Results never depend on the worker count. */
void awemet_set_workers(int n);

/* ---- dataset container ------------------------------------------------ */

typedef struct awemet_dataset awemet_dataset;

awemet_status awemet_dataset_open(const char* path, awemet_dataset** out);
void awemet_dataset_close(awemet_dataset* ds);
awemet_status awemet_dataset_counts(const awemet_dataset* ds, uint64_t* train,
                                    uint64_t* dev, uint64_t* test);
awemet_status awemet_dataset_num_words(const awemet_dataset* ds,
                                       uint64_t* num_words);

/* ---- commands ----------------------------------------------------------
 * config_path may be NULL or "" to run with documented defaults.
 * has_seed != 0 overrides the config seed with `seed`.
 * out_dir is created if missing.
 */

/* Synthesizes a dataset and writes <out_dir>/dataset.bin. */
awemet_status awemet_generate(const char* config_path, const char* out_dir,
                              int has_seed, uint64_t seed);

/* Trains one method; writes run_record.json, curve.csv, timings.csv and
 * checkpoint.bin into out_dir (pass "" to keep results in memory only). */
awemet_status awemet_train(const char* config_path, const char* dataset_path,
                           const char* out_dir, int has_seed, uint64_t seed);

/* Scores a checkpoint on the dev and test splits (acoustic and cross-view
 * average precision, optional alignment baseline on test); writes
 * eval_report.json / eval_report.txt. */
awemet_status awemet_evaluate(const char* config_path,
                              const char* dataset_path,
                              const char* checkpoint_path, const char* out_dir,
                              int has_seed, uint64_t seed);

/* Finite-difference audit of every method in the catalog; writes
 * grad_check.json / grad_check.txt. Returns AWEMET_ERR_NUMERIC if any
 * audit exceeds tolerance. */
awemet_status awemet_grad_check(const char* config_path, const char* out_dir,
                                int has_seed, uint64_t seed);

/* Trains a method list with repeated seeds and writes the comparison
 * table (grid_report.json, grid_table.txt, grid_table.csv). */
awemet_status awemet_grid(const char* config_path, const char* dataset_path,
                          const char* out_dir, int has_seed, uint64_t seed);

/* Re-renders a stored record (run/grid/eval/grad-check JSON) as text. */
awemet_status awemet_report(const char* record_path, const char* out_path);

/* ---- direct numeric entry points (tests, exploration) ------------------ */

/* labels: 1 = positive, 0 = negative. */
awemet_status awemet_average_precision(const double* scores,
                                       const int32_t* labels, size_t n,
                                       double* out_ap);

/* a: rows x a_cols, b: rows x b_cols, both column-major. */
awemet_status awemet_dtw_similarity(const double* a, size_t rows,
                                    size_t a_cols, const double* b,
                                    size_t b_cols, double* out_sim);

#ifdef __cplusplus
}
#endif

#endif /* AWEMET_H */
