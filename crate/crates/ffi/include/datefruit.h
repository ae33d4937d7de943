#ifndef DATEFRUIT_H
#define DATEFRUIT_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DF_OK 0

// A required pointer was null or an output buffer was too small.
#define DF_ERR_INVALID_ARGUMENT 1

// Bad parameters, corrupt or incompatible model, schema mismatch.
#define DF_ERR_CONFIG 2

#define DF_ERR_IO 3

// Undecodable image, no ROI found and other data-dependent failures.
#define DF_ERR_PIPELINE 4

// Invariant violation or a caught panic.
#define DF_ERR_INTERNAL 5

// Number of values written by [`df_extract_features`].
#define DF_FEATURE_COUNT 51

// Decoded RGB image.
typedef struct DfImage DfImage;

// Trained classifier loaded from its JSON document.
typedef struct DfModel DfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failed call on this thread, or NULL if none.
// The pointer stays valid until the next failing call on this thread.
const char *df_last_error_message(void);

// Decodes PNG, PPM or PGM bytes into a new image handle.
//
// # Safety
// `bytes` must point to `len` readable bytes and `out` to writable storage
// for one pointer.
int32_t df_image_decode(const uint8_t *bytes, size_t len, struct DfImage **out);

// # Safety
// `image` must be a live handle; `width` and `height` must be writable.
int32_t df_image_dimensions(const struct DfImage *image, size_t *width, size_t *height);

// Releases an image handle. NULL is ignored.
//
// # Safety
// `image` must be NULL or a handle not yet freed.
void df_image_free(struct DfImage *image);

// Resizes by `resize_scale` (in (0, 1]) with default segmentation settings
// and returns the crop around the fruit as a new image handle.
//
// # Safety
// `image` must be a live handle and `out` writable.
int32_t df_segment_roi(const struct DfImage *image, double resize_scale, struct DfImage **out);

// Writes the `DF_FEATURE_COUNT` hybrid features (Lab, statistical, wavelet,
// in that order) of the whole image into `out`. Segment first to featurize
// only the fruit.
//
// # Safety
// `image` must be a live handle and `out` must have room for `capacity`
// doubles.
int32_t df_extract_features(const struct DfImage *image, double *out, size_t capacity);

// Parses a model document written by `datefruit train`.
//
// # Safety
// `json` must point to `len` readable bytes and `out` must be writable.
int32_t df_model_load(const uint8_t *json, size_t len, struct DfModel **out);

// Number of classes; class indices returned by the predict calls are below it.
//
// # Safety
// `model` must be a live handle and `out` writable.
int32_t df_model_class_count(const struct DfModel *model, size_t *out);

// Name of class `index`, NUL-terminated and valid while the model lives.
// NULL if the handle is null or the index is out of range.
//
// # Safety
// `model` must be NULL or a live handle.
const char *df_model_class_name(const struct DfModel *model, size_t index);

// Classifies a feature vector in the `df_extract_features` layout. The
// model picks the columns it was trained on. Writes the winning class to
// `class_out` and, when `probabilities` is non-NULL, one probability per
// class (`capacity` must be at least the class count).
//
// # Safety
// `features` must point to `n_features` doubles; `probabilities`, when
// non-NULL, to `capacity` writable doubles.
int32_t df_model_predict(const struct DfModel *model,
                         const double *features,
                         size_t n_features,
                         size_t *class_out,
                         double *probabilities,
                         size_t capacity);

// Releases a model handle. NULL is ignored.
//
// # Safety
// `model` must be NULL or a handle not yet freed.
void df_model_free(struct DfModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DATEFRUIT_H */
