#ifndef STROKEPIPE_H
#define STROKEPIPE_H

/* Generated by cbindgen from the strokepipe-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum SpStatus {
  SpOk = 0,
  SpErrIo = 1,
  SpErrFormat = 2,
  SpErrDimension = 3,
  SpErrMask = 4,
  SpErrEmptyGlcm = 5,
  SpErrInvalidArg = 6,
  SpErrSingleClass = 7,
  SpErrDegenerate = 8,
  SpErrKindMismatch = 9,
  SpErrNonFinite = 10,
  SpErrNull = 11,
  SpErrUtf8 = 12,
  SpErrPanic = 13,
  SpErrOther = 14,
} SpStatus;

/**
 * Trained tier-1 network.
 */
typedef struct SpAnnModel SpAnnModel;

/**
 * Grayscale image with optional lesion mask.
 */
typedef struct SpImage SpImage;

/**
 * Fitted non-negative factorization basis.
 */
typedef struct SpNmfModel SpNmfModel;

/**
 * Trained kernel SVM.
 */
typedef struct SpSvmModel SpSvmModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sp_last_error(void);

/**
 * Load an 8-bit grayscale image (`.pgm` or `.png` by extension) into a new
 * handle written to `out`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum SpStatus sp_image_load(const char *path, struct SpImage **out);

/**
 * Release an image handle. Null is a no-op.
 *
 * # Safety
 * `img` must be null or a pointer returned by this library, not yet freed.
 */
void sp_image_free(struct SpImage *img);

/**
 * Image width in pixels; 0 if the handle is null.
 *
 * # Safety
 * `img` must be null or a valid image handle.
 */
size_t sp_image_width(const struct SpImage *img);

/**
 * Image height in pixels; 0 if the handle is null.
 *
 * # Safety
 * `img` must be null or a valid image handle.
 */
size_t sp_image_height(const struct SpImage *img);

/**
 * Number of gray levels; 0 if the handle is null.
 *
 * # Safety
 * `img` must be null or a valid image handle.
 */
size_t sp_image_levels(const struct SpImage *img);

/**
 * Rescale intensities so the mean of the brightest `top_fraction` of pixels
 * maps to the top bin; result is a new handle.
 *
 * # Safety
 * `img` must be a valid image handle and `out` a valid pointer.
 */
enum SpStatus sp_image_normalize_intensity(const struct SpImage *img,
                                           double top_fraction,
                                           struct SpImage **out);

/**
 * Reduce bit depth to `target_bpp`; result is a new handle.
 *
 * # Safety
 * `img` must be a valid image handle and `out` a valid pointer.
 */
enum SpStatus sp_image_quantize(const struct SpImage *img,
                                uint8_t target_bpp,
                                struct SpImage **out);

/**
 * Nearest-neighbor resample to `width` x `height`; result is a new handle.
 *
 * # Safety
 * `img` must be a valid image handle and `out` a valid pointer.
 */
enum SpStatus sp_image_resample(const struct SpImage *img,
                                size_t width,
                                size_t height,
                                struct SpImage **out);

/**
 * Mark lesion pixels invalid from a same-size binary mask file
 * (0 = valid, nonzero = lesion); result is a new handle.
 *
 * # Safety
 * `img` must be a valid image handle, `mask_path` a valid NUL-terminated
 * string, and `out` a valid pointer.
 */
enum SpStatus sp_image_apply_mask_file(const struct SpImage *img,
                                       const char *mask_path,
                                       struct SpImage **out);

/**
 * Compute the 28 texture features (14 direction means, 14 direction ranges)
 * of a quantized image into `out_values`, which must hold 28 doubles.
 *
 * # Safety
 * `img` must be a valid image handle and `out_values` point to 28 doubles.
 */
enum SpStatus sp_haralick_features28(const struct SpImage *img, double *out_values);

/**
 * Load a fitted basis from its JSON serialization.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum SpStatus sp_nmf_model_load(const char *path, struct SpNmfModel **out);

/**
 * Release a basis handle. Null is a no-op.
 *
 * # Safety
 * `model` must be null or a handle from `sp_nmf_model_load`, not yet freed.
 */
void sp_nmf_model_free(struct SpNmfModel *model);

/**
 * Number of basis columns (the encoding length).
 *
 * # Safety
 * `model` must be null or a valid basis handle.
 */
size_t sp_nmf_k(const struct SpNmfModel *model);

/**
 * Project an image onto the basis; writes `sp_nmf_k(model)` coefficients.
 *
 * # Safety
 * `model` and `img` must be valid handles; `out_values` must point to at
 * least `sp_nmf_k(model)` doubles.
 */
enum SpStatus sp_nmf_project_image(const struct SpNmfModel *model,
                                   const struct SpImage *img,
                                   double *out_values);

/**
 * Load a trained SVM from its JSON serialization.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum SpStatus sp_svm_model_load(const char *path, struct SpSvmModel **out);

/**
 * Release an SVM handle. Null is a no-op.
 *
 * # Safety
 * `model` must be null or a handle from `sp_svm_model_load`, not yet freed.
 */
void sp_svm_model_free(struct SpSvmModel *model);

/**
 * Expected feature dimension of the model.
 *
 * # Safety
 * `model` must be null or a valid SVM handle.
 */
size_t sp_svm_dim(const struct SpSvmModel *model);

/**
 * `f(x)`: the raw decision value of the model on a feature array.
 *
 * # Safety
 * `model` must be a valid SVM handle; `values` must point to `len` doubles;
 * `out` must be a valid pointer.
 */
enum SpStatus sp_svm_decision_value(const struct SpSvmModel *model,
                                    const double *values,
                                    size_t len,
                                    double *out);

/**
 * Normalized score: signed feature-space distance to the hyperplane.
 *
 * # Safety
 * Same contract as [`sp_svm_decision_value`].
 */
enum SpStatus sp_svm_score(const struct SpSvmModel *model,
                           const double *values,
                           size_t len,
                           double *out);

/**
 * Predicted label, -1 or +1 (an exact zero decision value maps to +1).
 *
 * # Safety
 * Same contract as [`sp_svm_decision_value`].
 */
enum SpStatus sp_svm_predict(const struct SpSvmModel *model,
                             const double *values,
                             size_t len,
                             int32_t *out);

/**
 * Combine two normalized scores by the multi-level rule: the larger |score|
 * decides; exact ties prefer model A. Writes the fused label (-1/+1) and the
 * choice (0 = A, 1 = B).
 *
 * # Safety
 * `out_label` and `out_chosen` must be valid pointers.
 */
enum SpStatus sp_fuse_scores(double score_a,
                             double score_b,
                             int32_t *out_label,
                             int32_t *out_chosen);

/**
 * Score both representations of one sample and fuse. `a_*` feeds the first
 * model, `b_*` the second.
 *
 * # Safety
 * `model_a`/`model_b` must be valid SVM handles; the value arrays must match
 * their declared lengths; out pointers must be valid.
 */
enum SpStatus sp_fused_predict(const struct SpSvmModel *model_a,
                               const double *a_values,
                               size_t a_len,
                               const struct SpSvmModel *model_b,
                               const double *b_values,
                               size_t b_len,
                               int32_t *out_label,
                               double *out_score_a,
                               double *out_score_b);

/**
 * Load a trained tier-1 network from its JSON serialization.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum SpStatus sp_ann_model_load(const char *path, struct SpAnnModel **out);

/**
 * Release a network handle. Null is a no-op.
 *
 * # Safety
 * `model` must be null or a handle from `sp_ann_model_load`, not yet freed.
 */
void sp_ann_model_free(struct SpAnnModel *model);

/**
 * Score a subject from the nine raw risk inputs, in order: systolic blood
 * pressure (mmHg), atrial fibrillation (0/1), smoker (0/1), cholesterol
 * (mg/dL), diabetic (0/1), exercises (0/1), obese (0/1), family history
 * (0/1), age (years). Writes the two sigmoid outputs.
 *
 * # Safety
 * `model` must be a valid network handle; `inputs` must point to `len`
 * doubles; out pointers must be valid.
 */
enum SpStatus sp_ann_forward(const struct SpAnnModel *model,
                             const double *inputs,
                             size_t len,
                             double *out_p_stroke,
                             double *out_p_normal);

/**
 * Sensitivity, specificity and accuracy (percentages) from confusion counts.
 * A metric with a zero denominator is written as NaN.
 *
 * # Safety
 * `out_sn`, `out_sp` and `out_ac` must be valid pointers.
 */
enum SpStatus sp_metrics(uint32_t tp,
                         uint32_t fn_,
                         uint32_t fp,
                         uint32_t tn,
                         double *out_sn,
                         double *out_sp,
                         double *out_ac);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STROKEPIPE_H */
