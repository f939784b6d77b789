#ifndef FBKAN_H
#define FBKAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum FbkanStatus {
  FBKAN_STATUS_OK = 0,
  FBKAN_STATUS_NULL_POINTER = 1,
  FBKAN_STATUS_INVALID_UTF8 = 2,
  FBKAN_STATUS_INVALID_ARGUMENT = 3,
  FBKAN_STATUS_NUMERICAL_FAILURE = 4,
  FBKAN_STATUS_COVERAGE_VIOLATION = 5,
  FBKAN_STATUS_CONFIG = 6,
  FBKAN_STATUS_IO = 7,
  FBKAN_STATUS_SERIALIZATION = 8,
  FBKAN_STATUS_PANIC = 9,
} FbkanStatus;

/**
 * Opaque model handle. Holds its own evaluation buffers, so one handle
 * must not be used from two threads at once.
 */
typedef struct FbkanModel FbkanModel;

/**
 * Outcome of [`fbkan_train`].
 */
typedef struct FbkanRunResult {
  double rel_l2;
  double initial_rel_l2;
  size_t param_count;
  size_t iterations;
} FbkanRunResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fbkan_version(void);

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length excluding
 * the NUL, or 0 when the last call succeeded. `buf` may be NULL to query
 * the length.
 *
 * # Safety
 * `buf` must be NULL or point to `len` writable bytes.
 */
size_t fbkan_last_error(char *buf, size_t len);

/**
 * Fresh (untrained) model for a preset name such as `helmholtz-fbkan1-L4`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FbkanStatus fbkan_model_from_preset(const char *name, uint64_t seed, struct FbkanModel **out);

/**
 * Fresh model (or the configured checkpoint) for a TOML run configuration.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FbkanStatus fbkan_model_from_config(const char *config_toml, struct FbkanModel **out);

/**
 * Load a checkpoint written by a training run.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FbkanStatus fbkan_model_load(const char *path, struct FbkanModel **out);

/**
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum FbkanStatus fbkan_model_save(struct FbkanModel *model, const char *path);

/**
 * Release a handle. NULL is ignored.
 *
 * # Safety
 * `model` must be NULL or a handle not yet freed.
 */
void fbkan_model_free(struct FbkanModel *model);

/**
 * Input dimension, or 0 for a NULL handle.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t fbkan_model_input_dim(const struct FbkanModel *model);

/**
 * Number of trainable parameters, or 0 for a NULL handle.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t fbkan_model_param_count(const struct FbkanModel *model);

/**
 * Copy the flat parameter vector into `out` (`len` must equal the
 * parameter count).
 *
 * # Safety
 * `model` must be a live handle and `out` point to `len` doubles.
 */
enum FbkanStatus fbkan_model_get_params(struct FbkanModel *model, double *out, size_t len);

/**
 * Replace the flat parameter vector.
 *
 * # Safety
 * `model` must be a live handle and `params` point to `len` doubles.
 */
enum FbkanStatus fbkan_model_set_params(struct FbkanModel *model, const double *params, size_t len);

/**
 * Evaluate the model at `n_points` row-major points of dimension `dim`,
 * writing one value per point to `out`.
 *
 * # Safety
 * `model` must be a live handle, `points` point to `n_points * dim`
 * doubles and `out` to `n_points` doubles.
 */
enum FbkanStatus fbkan_model_predict(struct FbkanModel *model,
                                     const double *points,
                                     size_t n_points,
                                     size_t dim,
                                     double *out);

/**
 * Value, gradient and diagonal second derivatives at one point. `first`
 * and `second_diag` hold `dim` doubles each and may be NULL; the
 * derivative order is the highest one requested.
 *
 * # Safety
 * `model` must be a live handle, `x` point to `dim` doubles, `value` be
 * valid, and `first` / `second_diag` be NULL or point to `dim` doubles.
 */
enum FbkanStatus fbkan_model_jet(struct FbkanModel *model,
                                 const double *x,
                                 size_t dim,
                                 double *value,
                                 double *first,
                                 double *second_diag);

/**
 * Train a configuration (TOML text, or `preset:<name>`) and write its
 * artifacts into `out_dir`. `result` may be NULL.
 *
 * # Safety
 * `config` and `out_dir` must be NUL-terminated strings; `result` must be
 * NULL or valid.
 */
enum FbkanStatus fbkan_train(const char *config,
                             const char *out_dir,
                             struct FbkanRunResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBKAN_H */
