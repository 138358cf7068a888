#ifndef GRASSTENSOR_H
#define GRASSTENSOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum GtStatus {
  GT_STATUS_OK = 0,
  GT_STATUS_NULL_POINTER = 1,
  GT_STATUS_BUFFER_TOO_SMALL = 2,
  GT_STATUS_PANIC = 3,
  GT_STATUS_INVALID_INPUT = 10,
  GT_STATUS_SHAPE_MISMATCH = 11,
  GT_STATUS_INVALID_PROFILE = 12,
  GT_STATUS_RANK_DEFICIENT = 13,
  GT_STATUS_POINT_AT_CENTER = 14,
  GT_STATUS_CENTERS_INTERSECT = 15,
  GT_STATUS_GENERALITY_VIOLATED = 16,
  GT_STATUS_BOUND_VIOLATED = 17,
  GT_STATUS_CONVERGENCE_FAILURE = 18,
  GT_STATUS_AMBIGUOUS_RECONSTRUCTION = 19,
  GT_STATUS_NOT_ON_LOCUS = 20,
  GT_STATUS_NO_CONJUGATE = 21,
  GT_STATUS_SHORT_SAMPLE = 22,
  GT_STATUS_UNDERDETERMINED = 23,
  /**
   * Any other library error; see [`gt_last_error`].
   */
  GT_STATUS_OTHER = 99,
} GtStatus;

/**
 * A list of cameras on one scene space.
 */
typedef struct GtCameras GtCameras;

typedef struct GtProblem GtProblem;

typedef struct GtTensor GtTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Name of a status code, as a static NUL-terminated string.
 */
const char *gt_status_name(enum GtStatus status);

/**
 * Message of the last failure on this thread; valid until the next call
 * that fails on the same thread.
 */
const char *gt_last_error(void);

/**
 * Cameras from row-major matrices concatenated in `data`; camera `j` is
 * `(h_list[j]+1) × (k+1)`.
 *
 * # Safety
 * `h_list` must point to `n` values, `data` to `data_len` values and `out`
 * must be writable.
 */
enum GtStatus gt_cameras_new(uint32_t k,
                             const uint32_t *h_list,
                             uintptr_t n,
                             const double *data,
                             uintptr_t data_len,
                             struct GtCameras **out_handle);

/**
 * Seeded cameras in general position.
 *
 * # Safety
 * `h_list` must point to `n` values and `out_handle` must be writable.
 */
enum GtStatus gt_cameras_sample(uint32_t k,
                                const uint32_t *h_list,
                                uintptr_t n,
                                uint64_t seed,
                                struct GtCameras **out_handle);

/**
 * Zero for a null handle.
 *
 * # Safety
 * `cams` must be null or a live handle.
 */
uintptr_t gt_cameras_count(const struct GtCameras *cams);

/**
 * Row-major entries of camera `index`; `buf_len` must be at least
 * `(h+1)(k+1)`.
 *
 * # Safety
 * `cams` must be a live handle and `buf` must hold `buf_len` values.
 */
enum GtStatus gt_cameras_copy(const struct GtCameras *cams,
                              uintptr_t index,
                              double *buf,
                              uintptr_t buf_len);

/**
 * # Safety
 * `cams` must come from this library and not be used afterwards.
 */
void gt_cameras_free(struct GtCameras *cams);

/**
 * # Safety
 * `cams` must be a live handle, `profile` must point to one value per
 * camera and `out_handle` must be writable.
 */
enum GtStatus gt_tensor_build(const struct GtCameras *cams,
                              const uint32_t *profile,
                              uintptr_t n,
                              struct GtTensor **out_handle);

/**
 * Zero for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
uintptr_t gt_tensor_len(const struct GtTensor *t);

/**
 * Row-major entries (last axis fastest).
 *
 * # Safety
 * `t` must be a live handle and `buf` must hold `buf_len` values.
 */
enum GtStatus gt_tensor_copy_entries(const struct GtTensor *t, double *buf, uintptr_t buf_len);

/**
 * Sign- and scale-invariant distance `1 − |cos|`.
 *
 * # Safety
 * `a` and `b` must be live handles and `distance` writable.
 */
enum GtStatus gt_tensor_distance(const struct GtTensor *a,
                                 const struct GtTensor *b,
                                 double *distance);

/**
 * # Safety
 * `t` must come from this library and not be used afterwards.
 */
void gt_tensor_free(struct GtTensor *t);

/**
 * Cameras (first one `[I | 0]`) reproducing a tensor; `distance` receives
 * the tensor distance of the fit.
 *
 * # Safety
 * `t` must be a live handle; the out pointers must be writable.
 */
enum GtStatus gt_recover_cameras(const struct GtTensor *t,
                                 uint64_t seed,
                                 struct GtCameras **out_handle,
                                 double *distance);

/**
 * # Safety
 * `rank` must be writable.
 */
enum GtStatus gt_bifocal_rank(uint32_t k,
                              uint32_t h1,
                              uint32_t h2,
                              uint32_t a1,
                              uint32_t a2,
                              uint64_t *rank);

/**
 * # Safety
 * `h` and `profile` must point to three values; `rank` must be writable.
 */
enum GtStatus gt_trifocal_rank(uint32_t k,
                               const uint32_t *h,
                               const uint32_t *profile,
                               uint64_t *rank);

/**
 * # Safety
 * `h_list` must point to `n` values; `dim` must be writable.
 */
enum GtStatus gt_variety_dimension(uint32_t k, const uint32_t *h_list, uintptr_t n, int64_t *dim);

/**
 * # Safety
 * `h_list` must point to `n` values; `dim` must be writable.
 */
enum GtStatus gt_expected_dimension(uint32_t k, const uint32_t *h_list, uintptr_t n, int64_t *dim);

/**
 * # Safety
 * `h_list` must point to `n` values; `degree` must be writable.
 */
enum GtStatus gt_expected_degree(uint32_t k, const uint32_t *h_list, uintptr_t n, uint64_t *degree);

/**
 * A critical problem from two camera lists. The handles stay owned by the
 * caller.
 *
 * # Safety
 * `p` and `q` must be live handles and `out_handle` writable.
 */
enum GtStatus gt_problem_new(const struct GtCameras *p,
                             const struct GtCameras *q,
                             struct GtProblem **out_handle);

/**
 * # Safety
 * `h_list` must point to `n` values and `out_handle` must be writable.
 */
enum GtStatus gt_problem_sample(uint32_t k,
                                const uint32_t *h_list,
                                uintptr_t n,
                                uint64_t seed,
                                struct GtProblem **out_handle);

/**
 * # Safety
 * `prob` must come from this library and not be used afterwards.
 */
void gt_problem_free(struct GtProblem *prob);

/**
 * Rank-drop membership of `x` (length `k+1`).
 *
 * # Safety
 * `prob` must be a live handle, `x` must hold `len` values and the out
 * pointers must be writable.
 */
enum GtStatus gt_critical_membership(const struct GtProblem *prob,
                                     const double *x,
                                     uintptr_t len,
                                     double tol,
                                     int *is_member,
                                     uintptr_t *rank_gap);

/**
 * `count` seeded points of the locus, written consecutively (each of
 * length `k+1`) into `buf`.
 *
 * # Safety
 * `prob` must be a live handle and `buf` must hold `buf_len` values.
 */
enum GtStatus gt_critical_sample(const struct GtProblem *prob,
                                 uintptr_t count,
                                 uint64_t seed,
                                 double *buf,
                                 uintptr_t buf_len);

/**
 * Conjugate point of a critical `x`, written into `y` (length `k+1`).
 *
 * # Safety
 * `prob` must be a live handle; `x` and `y` must hold `len` values.
 */
enum GtStatus gt_conjugate_point(const struct GtProblem *prob,
                                 const double *x,
                                 uintptr_t len,
                                 double *y);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRASSTENSOR_H */
