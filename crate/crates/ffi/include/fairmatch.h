#ifndef FAIRMATCH_H
#define FAIRMATCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FmStatus {
  FM_STATUS_OK = 0,
  FM_STATUS_NULL_POINTER = 1,
  FM_STATUS_INVALID_UTF8 = 2,
  FM_STATUS_CONFIG = 3,
  FM_STATUS_IO = 4,
  FM_STATUS_PARSE = 5,
  FM_STATUS_RUNTIME = 6,
  FM_STATUS_PANIC = 7,
} FmStatus;

typedef enum FmAlgorithm {
  FM_ALGORITHM_FAIR_MATCH = 0,
  FM_ALGORITHM_CF = 1,
  FM_ALGORITHM_RECON = 2,
  FM_ALGORITHM_GALE_SHAPLEY = 3,
} FmAlgorithm;

/**
 * Result of a full experiment run.
 */
typedef struct FmArtifact FmArtifact;

/**
 * Experiment settings.
 */
typedef struct FmConfig FmConfig;

/**
 * A loaded or generated market.
 */
typedef struct FmDataset FmDataset;

/**
 * Lists produced by one recommender, with the dataset's user ids.
 */
typedef struct FmRecommendations FmRecommendations;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next fairmatch call on the same thread.
 */
const char *fm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fm_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void fm_string_free(char *s);

/**
 * Default settings with the given seed.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum FmStatus fm_config_new(uint64_t seed, struct FmConfig **out);

/**
 * Parses and validates an experiment TOML document.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum FmStatus fm_config_from_toml(const char *toml, struct FmConfig **out);

/**
 * The config as TOML with every default filled in.
 *
 * # Safety
 * `config` must come from this library; `out` must be writable.
 */
enum FmStatus fm_config_to_toml(const struct FmConfig *config, char **out);

/**
 * Sets the list length.
 *
 * # Safety
 * `config` must come from this library.
 */
enum FmStatus fm_config_set_k(struct FmConfig *config, size_t k);

/**
 * # Safety
 * `config` must be NULL or come from this library, not yet freed.
 */
void fm_config_free(struct FmConfig *config);

/**
 * Generates a synthetic market. `json` holds generator settings (NULL or
 * "{}" for defaults); `seed` replaces any seed it contains.
 *
 * # Safety
 * `json` must be NULL or NUL-terminated; `out` must be writable.
 */
enum FmStatus fm_dataset_synthetic(const char *json, uint64_t seed, struct FmDataset **out);

/**
 * Loads profiles and interactions. `format` is "csv", "jsonl" or NULL to
 * infer from the profile file extension.
 *
 * # Safety
 * Path arguments must be NUL-terminated; `out` must be writable.
 */
enum FmStatus fm_dataset_load(const char *profiles,
                              const char *interactions,
                              const char *format,
                              struct FmDataset **out);

/**
 * Number of users on both sides.
 *
 * # Safety
 * `dataset` must come from this library.
 */
enum FmStatus fm_dataset_len(const struct FmDataset *dataset, size_t *out);

/**
 * Hex SHA-256 digest of the dataset contents.
 *
 * # Safety
 * `dataset` must come from this library; `out` must be writable.
 */
enum FmStatus fm_dataset_digest(const struct FmDataset *dataset, char **out);

/**
 * # Safety
 * `dataset` must be NULL or come from this library, not yet freed.
 */
void fm_dataset_free(struct FmDataset *dataset);

/**
 * Recommends on the full interaction graph of `dataset`, using the list
 * length and algorithm settings of `config`.
 *
 * # Safety
 * Handles must come from this library; `out` must be writable.
 */
enum FmStatus fm_recommend(const struct FmDataset *dataset,
                           const struct FmConfig *config,
                           enum FmAlgorithm algorithm,
                           struct FmRecommendations **out);

/**
 * Number of lists, one per user.
 *
 * # Safety
 * `recs` must come from this library.
 */
enum FmStatus fm_recommendations_len(const struct FmRecommendations *recs, size_t *out);

/**
 * All lists as JSON: `{"k": K, "lists": [{"user", "items": [{"candidate",
 * "score"}], "cold_start", "infeasible"}]}` with user ids.
 *
 * # Safety
 * `recs` must come from this library; `out` must be writable.
 */
enum FmStatus fm_recommendations_json(const struct FmRecommendations *recs, char **out);

/**
 * # Safety
 * `recs` must be NULL or come from this library, not yet freed.
 */
void fm_recommendations_free(struct FmRecommendations *recs);

/**
 * Runs the full experiment described by `config`. Nothing is written.
 *
 * # Safety
 * `config` must come from this library; `out` must be writable.
 */
enum FmStatus fm_run_experiment(const struct FmConfig *config, struct FmArtifact **out);

/**
 * The run as pretty JSON without timings, byte-stable across reruns.
 *
 * # Safety
 * `artifact` must come from this library; `out` must be writable.
 */
enum FmStatus fm_artifact_json(const struct FmArtifact *artifact, char **out);

/**
 * Writes report.json, report.csv, report.md and timings.json into `dir`.
 *
 * # Safety
 * `artifact` must come from this library; `dir` must be NUL-terminated.
 */
enum FmStatus fm_artifact_write(const struct FmArtifact *artifact, const char *dir);

/**
 * # Safety
 * `artifact` must be NULL or come from this library, not yet freed.
 */
void fm_artifact_free(struct FmArtifact *artifact);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRMATCH_H */
