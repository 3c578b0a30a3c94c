#ifndef CONNECTE_H
#define CONNECTE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CteStatus {
  CTE_STATUS_OK = 0,
  CTE_STATUS_NULL_ARGUMENT = 1,
  CTE_STATUS_INVALID_UTF8 = 2,
  CTE_STATUS_IO = 3,
  CTE_STATUS_DATA = 4,
  CTE_STATUS_CHECKPOINT = 5,
  CTE_STATUS_CONFIG = 6,
  CTE_STATUS_NOT_FOUND = 7,
  CTE_STATUS_OUT_OF_RANGE = 8,
  CTE_STATUS_BUFFER_TOO_SMALL = 9,
  CTE_STATUS_PANIC = 10,
} CteStatus;

/**
 * Scoring modes accepted by [`cte_predict_topk`].
 */
typedef enum CteMode {
  CTE_MODE_E2T = 0,
  CTE_MODE_COMPOSITE = 1,
} CteMode;

/**
 * Loaded parameters, vocabularies and training graph.
 */
typedef struct CteModel CteModel;

typedef struct CteDims {
  size_t kappa;
  size_t ell;
  size_t entities;
  size_t relations;
  size_t types;
} CteDims;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failed call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *cte_last_error(void);

/**
 * Loads a checkpoint directory. `data_dir` may be null, in which case the
 * prepared dataset recorded in the checkpoint manifest is used.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum CteStatus cte_model_load(const char *checkpoint_dir,
                              const char *data_dir,
                              struct CteModel **out_model);

/**
 * Releases a handle from [`cte_model_load`]. Null is ignored.
 *
 * # Safety
 * `model` must come from [`cte_model_load`] and not be used afterwards.
 */
void cte_model_free(struct CteModel *model);

/**
 * # Safety
 * `model` must be a live handle; `out_dims` must be writable.
 */
enum CteStatus cte_model_dims(const struct CteModel *model, struct CteDims *out_dims);

/**
 * λ the model was trained with.
 *
 * # Safety
 * `model` must be a live handle; `out_lambda` must be writable.
 */
enum CteStatus cte_model_lambda(const struct CteModel *model, double *out_lambda);

/**
 * # Safety
 * `model` must be a live handle, `name` NUL-terminated, `out_id` writable.
 */
enum CteStatus cte_entity_id(const struct CteModel *model, const char *name, uint32_t *out_id);

/**
 * # Safety
 * As [`cte_entity_id`].
 */
enum CteStatus cte_relation_id(const struct CteModel *model, const char *name, uint32_t *out_id);

/**
 * # Safety
 * As [`cte_entity_id`].
 */
enum CteStatus cte_type_id(const struct CteModel *model, const char *name, uint32_t *out_id);

/**
 * Copies the NUL-terminated name into `buf`. `out_len` (nullable) receives the
 * name length without the terminator, also when the buffer is too small.
 *
 * # Safety
 * `model` must be a live handle and `buf` writable for `cap` bytes.
 */
enum CteStatus cte_entity_name(const struct CteModel *model,
                               uint32_t id,
                               char *buf,
                               size_t cap,
                               size_t *out_len);

/**
 * See [`cte_entity_name`].
 *
 * # Safety
 * As [`cte_entity_name`].
 */
enum CteStatus cte_type_name(const struct CteModel *model,
                             uint32_t id,
                             char *buf,
                             size_t cap,
                             size_t *out_len);

/**
 * `‖e_h + r − e_t‖²`.
 *
 * # Safety
 * `model` must be a live handle; `out_score` must be writable.
 */
enum CteStatus cte_score_transe(const struct CteModel *model,
                                uint32_t head,
                                uint32_t rel,
                                uint32_t tail,
                                double *out_score);

/**
 * `‖M e − t‖²`.
 *
 * # Safety
 * As [`cte_score_transe`].
 */
enum CteStatus cte_score_e2t(const struct CteModel *model,
                             uint32_t entity,
                             uint32_t ty,
                             double *out_score);

/**
 * `‖t_h + r − t_t‖²` in type space.
 *
 * # Safety
 * As [`cte_score_transe`].
 */
enum CteStatus cte_score_trt(const struct CteModel *model,
                             uint32_t head_type,
                             uint32_t rel,
                             uint32_t tail_type,
                             double *out_score);

/**
 * Composite typing score of `(entity, ty)` over the training neighborhood.
 *
 * # Safety
 * As [`cte_score_transe`].
 */
enum CteStatus cte_score_composite(const struct CteModel *model,
                                   uint32_t entity,
                                   uint32_t ty,
                                   double lambda,
                                   double *out_score);

/**
 * Writes the `k` lowest-scoring types of `entity`, ascending with ties broken
 * by id, into `out_types` and `out_scores` (each with room for `k` values).
 * `out_count` receives `min(k, types)`. `mode` is a [`CteMode`] value.
 *
 * # Safety
 * `model` must be a live handle; the output arrays must hold `k` elements.
 */
enum CteStatus cte_predict_topk(const struct CteModel *model,
                                uint32_t entity,
                                size_t k,
                                int mode,
                                double lambda,
                                uint32_t *out_types,
                                double *out_scores,
                                size_t *out_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONNECTE_H */
