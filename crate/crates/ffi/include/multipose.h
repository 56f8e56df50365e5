#ifndef MULTIPOSE_H
#define MULTIPOSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum MpStatus {
  MP_STATUS_OK = 0,
  MP_STATUS_NULL_POINTER = 1,
  MP_STATUS_INVALID_ARGUMENT = 2,
  MP_STATUS_DIMENSION_MISMATCH = 3,
  MP_STATUS_IO = 4,
  MP_STATUS_PARSE = 5,
  MP_STATUS_CHECKPOINT = 6,
  MP_STATUS_NON_FINITE = 7,
  MP_STATUS_DEGENERATE = 8,
  MP_STATUS_WRONG_MODEL_KIND = 9,
  MP_STATUS_BUFFER_TOO_SMALL = 10,
  MP_STATUS_PANIC = 11,
} MpStatus;

/**
 * Kind of a loaded model.
 */
typedef enum MpModelKind {
  MP_MODEL_KIND_CVAE = 0,
  MP_MODEL_KIND_BASELINE = 1,
} MpModelKind;

/**
 * Opaque model handle.
 */
typedef struct MpModel MpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mp_version(void);

/**
 * Loads a checkpoint written by `multipose train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MpStatus mp_model_load(const char *path, struct MpModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from [`mp_model_load`] and not be freed twice.
 */
void mp_model_free(struct MpModel *model);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum MpStatus mp_model_kind(const struct MpModel *model, enum MpModelKind *out);

/**
 * Input (2D) and output (3D) joint counts of the model.
 *
 * # Safety
 * `model` must be a live handle; both outputs must be writable.
 */
enum MpStatus mp_model_joints(const struct MpModel *model, size_t *joints_2d, size_t *joints_3d);

/**
 * Draws `k` root-centred candidates from a CVAE for one 2D pose. Writes
 * `k * 3 * joints_3d` values to `out`. The same seed reproduces the draw
 * and a larger `k` extends a smaller one.
 *
 * # Safety
 * `pose2d` must hold `len_2d` values and `out` `out_len` values.
 */
enum MpStatus mp_model_sample(const struct MpModel *model,
                              const double *pose2d,
                              size_t len_2d,
                              size_t k,
                              uint64_t seed,
                              double *out,
                              size_t out_len);

/**
 * Deterministic root-centred prediction of a baseline model.
 *
 * # Safety
 * `pose2d` must hold `len_2d` values and `out` `out_len` values.
 */
enum MpStatus mp_baseline_regress(const struct MpModel *model,
                                  const double *pose2d,
                                  size_t len_2d,
                                  double *out,
                                  size_t out_len);

/**
 * Mean per-joint Euclidean distance.
 *
 * # Safety
 * `pred` and `gt` must hold `3 * num_joints` values; `out` must be writable.
 */
enum MpStatus mp_mpjpe(const double *pred, const double *gt, size_t num_joints, double *out);

/**
 * MPJPE after similarity (or rigid, when `with_scale` is false) alignment.
 *
 * # Safety
 * As [`mp_mpjpe`].
 */
enum MpStatus mp_pa_mpjpe(const double *pred,
                          const double *gt,
                          size_t num_joints,
                          bool with_scale,
                          double *out);

/**
 * Temperature softmax of `n` scores into `out`.
 *
 * # Safety
 * `scores` and `out` must hold `n` values.
 */
enum MpStatus mp_softmax_weights(const double *scores, size_t n, double temperature, double *out);

/**
 * Scores `k` candidates against a reference ordinal matrix and writes the
 * weighted average pose to `out` (`3 * num_joints` values). The reference
 * is `n_ref * n_ref` codes (1 farther, 2 nearer, 3 equal, 0 unknown),
 * sanitized before use. With 17 joints and a 16x16 reference the standard
 * skeleton's scoring joints are used; otherwise `n_ref` must equal
 * `num_joints`. `weights_out` may be null; otherwise it receives `k` values.
 *
 * # Safety
 * `samples` must hold `k * 3 * num_joints` values, `reference`
 * `n_ref * n_ref` bytes and `out` `3 * num_joints` values.
 */
enum MpStatus mp_ordinal_aggregate(const double *samples,
                                   size_t k,
                                   size_t num_joints,
                                   const uint8_t *reference,
                                   size_t n_ref,
                                   double epsilon,
                                   double temperature,
                                   double *out,
                                   double *weights_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MULTIPOSE_H */
