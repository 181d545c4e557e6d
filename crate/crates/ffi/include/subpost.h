#ifndef SUBPOST_H
#define SUBPOST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SubpostStatus {
  SUBPOST_STATUS_OK = 0,
  SUBPOST_STATUS_NULL_POINTER = 1,
  SUBPOST_STATUS_INVALID_ARGUMENT = 2,
  SUBPOST_STATUS_DIMENSION_MISMATCH = 3,
  SUBPOST_STATUS_NOT_POSITIVE_DEFINITE = 4,
  SUBPOST_STATUS_NUMERICAL = 5,
  SUBPOST_STATUS_IO = 6,
  SUBPOST_STATUS_CONFIG = 7,
  SUBPOST_STATUS_CELL_FAILURES = 8,
  SUBPOST_STATUS_PANIC = 9,
  SUBPOST_STATUS_OTHER = 10,
} SubpostStatus;

/**
 * A set of subposterior chains of common dimension, built incrementally.
 */
typedef struct SubpostChains SubpostChains;

/**
 * A combined sample.
 */
typedef struct SubpostSample SubpostSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *subpost_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *subpost_version(void);

/**
 * Creates an empty chain set of dimension `dim`.
 */
enum SubpostStatus subpost_chains_new(size_t dim, struct SubpostChains **out);

/**
 * Appends a chain of `n_draws` row-major draws (`n_draws * dim` values).
 *
 * # Safety
 * `chains` must come from [`subpost_chains_new`]; `draws` must point to
 * `n_draws * dim` readable doubles.
 */
enum SubpostStatus subpost_chains_add(struct SubpostChains *chains,
                                      const double *draws,
                                      size_t n_draws);

/**
 * Number of chains added so far.
 *
 * # Safety
 * `chains` must be null or come from [`subpost_chains_new`].
 */
size_t subpost_chains_count(const struct SubpostChains *chains);

/**
 * # Safety
 * `chains` must be null or come from [`subpost_chains_new`], and not be used afterwards.
 */
void subpost_chains_free(struct SubpostChains *chains);

/**
 * Average of recentred subposteriors.
 *
 * # Safety
 * `chains` must come from [`subpost_chains_new`]; `out` must be writable.
 */
enum SubpostStatus subpost_combine_ar(const struct SubpostChains *chains,
                                      struct SubpostSample **out);

/**
 * Consensus Monte Carlo with inverse-covariance weights.
 *
 * # Safety
 * `chains` must come from [`subpost_chains_new`]; `out` must be writable.
 */
enum SubpostStatus subpost_combine_cmc(const struct SubpostChains *chains,
                                       struct SubpostSample **out);

/**
 * Number of draws in a combined sample.
 *
 * # Safety
 * `sample` must be null or come from a combine function.
 */
size_t subpost_sample_len(const struct SubpostSample *sample);

/**
 * # Safety
 * `sample` must be null or come from a combine function.
 */
size_t subpost_sample_dim(const struct SubpostSample *sample);

/**
 * Copies the row-major draws into `buf`, which must hold `len * dim` values.
 *
 * # Safety
 * `sample` must come from a combine function; `buf` must point to `buf_len` writable doubles.
 */
enum SubpostStatus subpost_sample_draws(const struct SubpostSample *sample,
                                        double *buf,
                                        size_t buf_len);

/**
 * Copies the recentring point (`dim` values) into `buf`.
 *
 * # Safety
 * `sample` must come from a combine function; `buf` must point to `buf_len` writable doubles.
 */
enum SubpostStatus subpost_sample_center(const struct SubpostSample *sample,
                                         double *buf,
                                         size_t buf_len);

/**
 * # Safety
 * `sample` must be null or come from a combine function, and not be used afterwards.
 */
void subpost_sample_free(struct SubpostSample *sample);

/**
 * `KL(N(mu1, sigma) || N(mu2, sigma))` with `sigma` row-major `dim x dim`.
 *
 * # Safety
 * `mu1`, `mu2` must point to `dim` doubles, `sigma` to `dim * dim`, `out` to one.
 */
enum SubpostStatus subpost_gaussian_kl(const double *mu1,
                                       const double *mu2,
                                       const double *sigma,
                                       size_t dim,
                                       double *out);

/**
 * Total-variation bound `2 sqrt(kl)`.
 *
 * # Safety
 * `out` must point to one writable double.
 */
enum SubpostStatus subpost_tv_bound(double kl, double *out);

/**
 * Marginal-sum L2 distance between two row-major samples of dimension `dim`.
 * Writes the standardized total to `out_total` and, if `per_marginal` is
 * non-null, the `dim` standardized per-marginal values.
 *
 * # Safety
 * `a` must point to `n_a * dim` doubles, `b` to `n_b * dim`, `out_total` to
 * one and `per_marginal` (if non-null) to `dim`.
 */
enum SubpostStatus subpost_l2_samples(const double *a,
                                      size_t n_a,
                                      const double *b,
                                      size_t n_b,
                                      size_t dim,
                                      size_t grid_size,
                                      double *out_total,
                                      double *per_marginal);

/**
 * Runs the experiment in the TOML file `config_path` and writes its outputs
 * to `output_dir` (or the config's directory when null). `all_ok` receives
 * 1 if every cell completed; a run with failed cells returns
 * [`SubpostStatus::CellFailures`].
 *
 * # Safety
 * `config_path` and `output_dir` (if non-null) must be NUL-terminated UTF-8;
 * `all_ok` must be null or writable.
 */
enum SubpostStatus subpost_run_experiment(const char *config_path,
                                          const char *output_dir,
                                          int32_t *all_ok);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBPOST_H */
