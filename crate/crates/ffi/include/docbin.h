#ifndef DOCBIN_H
#define DOCBIN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Model-free enhancers selectable from C.
 */
typedef enum DocbinEnhancer {
  DOCBIN_ENHANCER_IDENTITY = 0,
  DOCBIN_ENHANCER_BASELINE = 1,
} DocbinEnhancer;

typedef enum DocbinStatus {
  DOCBIN_STATUS_OK = 0,
  /**
   * A required pointer was NULL.
   */
  DOCBIN_STATUS_NULL_POINTER = 1,
  /**
   * Value out of range, odd size where even is needed, bad UTF-8 path.
   */
  DOCBIN_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Two inputs that must share a size do not.
   */
  DOCBIN_STATUS_DIMENSION_MISMATCH = 3,
  /**
   * File missing, unreadable or undecodable.
   */
  DOCBIN_STATUS_IO = 4,
  /**
   * Metric undefined for the input, e.g. ground truth without text.
   */
  DOCBIN_STATUS_UNDEFINED = 5,
  /**
   * Buffer length, grid or manifest inconsistent with the stated shape.
   */
  DOCBIN_STATUS_STRUCTURE = 6,
  /**
   * Panic caught at the boundary.
   */
  DOCBIN_STATUS_INTERNAL = 7,
} DocbinStatus;

/**
 * Opaque binary mask handle.
 */
typedef struct DocbinMask DocbinMask;

/**
 * Opaque 8-bit image handle.
 */
typedef struct DocbinRaster DocbinRaster;

typedef struct DocbinConfig {
  size_t patch_size;
  size_t global_size;
  double omega;
  double local_global_weight;
  enum DocbinEnhancer stage2;
  enum DocbinEnhancer local;
  enum DocbinEnhancer global;
} DocbinConfig;

/**
 * Scores for one prediction. `psnr` is +infinity for identical masks, in
 * which case `avg` is NaN.
 */
typedef struct DocbinMetrics {
  double fm;
  double pfm;
  double psnr;
  double drd;
  double avg;
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
  uint64_t tn;
} DocbinMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *docbin_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *docbin_version(void);

/**
 * Defaults: 224 px patches, 512 px global branch, equal fusion weights,
 * identity enhancers.
 */
struct DocbinConfig docbin_config_default(void);

/**
 * Copy `len` bytes of interleaved pixel data into a new raster.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum DocbinStatus docbin_raster_new(size_t width,
                                    size_t height,
                                    size_t channels,
                                    const uint8_t *data,
                                    size_t len,
                                    struct DocbinRaster **out);

/**
 * Decode a PNG, BMP or TIFF file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DocbinStatus docbin_raster_load(const char *path, struct DocbinRaster **out);

/**
 * # Safety
 * `raster` must be a live handle or NULL.
 */
size_t docbin_raster_width(const struct DocbinRaster *raster);

/**
 * # Safety
 * `raster` must be a live handle or NULL.
 */
size_t docbin_raster_height(const struct DocbinRaster *raster);

/**
 * # Safety
 * `raster` must be a live handle or NULL.
 */
size_t docbin_raster_channels(const struct DocbinRaster *raster);

/**
 * # Safety
 * `raster` must come from this library and not be freed twice. NULL is a no-op.
 */
void docbin_raster_free(struct DocbinRaster *raster);

/**
 * Run the full three-stage pipeline. `config` may be NULL for defaults.
 *
 * # Safety
 * `raster` must be a live handle, `config` NULL or valid, `out` writable.
 */
enum DocbinStatus docbin_binarize(const struct DocbinRaster *raster,
                                  const struct DocbinConfig *config,
                                  struct DocbinMask **out);

/**
 * Mask from one byte per pixel; nonzero marks text.
 *
 * # Safety
 * `data` must point to `width * height` readable bytes; `out` writable.
 */
enum DocbinStatus docbin_mask_new(size_t width,
                                  size_t height,
                                  const uint8_t *data,
                                  struct DocbinMask **out);

/**
 * Decode an image and threshold it at 0.5 (dark pixels are text).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` writable.
 */
enum DocbinStatus docbin_mask_load(const char *path, struct DocbinMask **out);

/**
 * Write the mask as an image, text black on white.
 *
 * # Safety
 * `mask` must be a live handle; `path` a NUL-terminated string.
 */
enum DocbinStatus docbin_mask_save(const struct DocbinMask *mask, const char *path);

/**
 * # Safety
 * `mask` must be a live handle or NULL.
 */
size_t docbin_mask_width(const struct DocbinMask *mask);

/**
 * # Safety
 * `mask` must be a live handle or NULL.
 */
size_t docbin_mask_height(const struct DocbinMask *mask);

/**
 * Copy the mask into `buf` as one byte per pixel (1 text, 0 background).
 *
 * # Safety
 * `mask` must be a live handle; `buf` must have room for `len` bytes.
 */
enum DocbinStatus docbin_mask_copy(const struct DocbinMask *mask, uint8_t *buf, size_t len);

/**
 * # Safety
 * `mask` must come from this library and not be freed twice. NULL is a no-op.
 */
void docbin_mask_free(struct DocbinMask *mask);

/**
 * Compute FM, pseudo-FM (contour-distance weighting), PSNR, DRD and Avg.
 *
 * # Safety
 * `pred` and `gt` must be live handles; `out` writable.
 */
enum DocbinStatus docbin_evaluate(const struct DocbinMask *pred,
                                  const struct DocbinMask *gt,
                                  struct DocbinMetrics *out);

/**
 * `(fm + pfm + psnr + (100 - drd)) / 4`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DocbinStatus docbin_avg_score(double fm, double pfm, double psnr, double drd, double *out);

/**
 * Wavelet preprocessing of one even-sized plane: LL subband, sigmoid
 * normalization with automatic parameters, bicubic upsampling.
 *
 * # Safety
 * `input` and `output` must each hold `width * height` doubles.
 */
enum DocbinStatus docbin_stage1_transform(const double *input,
                                          size_t width,
                                          size_t height,
                                          double *output);

/**
 * Otsu threshold of a plane; pixels whose rounded value is below it form the
 * dark class.
 *
 * # Safety
 * `input` must hold `width * height` doubles; `out` writable.
 */
enum DocbinStatus docbin_otsu_threshold(const double *input,
                                        size_t width,
                                        size_t height,
                                        uint8_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOCBIN_H */
