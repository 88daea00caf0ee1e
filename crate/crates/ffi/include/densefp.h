#ifndef DENSEFP_H
#define DENSEFP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DfpStatus {
  DFP_STATUS_OK = 0,
  DFP_STATUS_NULL_ARGUMENT = 1,
  DFP_STATUS_INVALID_ARGUMENT = 2,
  DFP_STATUS_SIZE_MISMATCH = 3,
  DFP_STATUS_FORMAT = 4,
  DFP_STATUS_DUPLICATE_ID = 5,
  DFP_STATUS_IO = 6,
  DFP_STATUS_IMAGE = 7,
  DFP_STATUS_NO_FOREGROUND = 8,
  DFP_STATUS_INVALID_POSE = 9,
  DFP_STATUS_PANIC = 10,
  DFP_STATUS_OTHER = 11,
} DfpStatus;

/**
 * The variants of one descriptor file.
 */
typedef struct DfpDescriptorSet DfpDescriptorSet;

/**
 * Immutable searchable gallery.
 */
typedef struct DfpGallery DfpGallery;

/**
 * Collects `(id, descriptor set)` entries before building a gallery.
 */
typedef struct DfpGalleryBuilder DfpGalleryBuilder;

/**
 * Pose of a print on its image: center in pixels, orientation in degrees
 * (counter-clockwise, 0 = finger pointing up).
 */
typedef struct DfpPose {
  double cx;
  double cy;
  double theta;
} DfpPose;

/**
 * One search hit.
 */
typedef struct DfpMatch {
  size_t gallery_index;
  double fused_score;
  size_t best_variant;
} DfpMatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into the library from the same thread.
 */
const char *dfp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dfp_version(void);

/**
 * Decodes an in-memory descriptor file.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be writable.
 */
enum DfpStatus dfp_descriptors_decode(const uint8_t *bytes,
                                      size_t len,
                                      struct DfpDescriptorSet **out);

/**
 * Reads a descriptor file from disk.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DfpStatus dfp_descriptors_read(const char *path, struct DfpDescriptorSet **out);

/**
 * Extracts a single clean-variant descriptor from an image file. With a
 * NULL `pose` the baseline pose estimate is used.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `pose` NULL or readable, `out`
 * writable.
 */
enum DfpStatus dfp_extract_image(const char *path,
                                 const struct DfpPose *pose,
                                 struct DfpDescriptorSet **out);

/**
 * Serializes a set. Release the buffer with [`dfp_bytes_free`].
 *
 * # Safety
 * `set` must be a live handle; `out` and `out_len` must be writable.
 */
enum DfpStatus dfp_descriptors_encode(const struct DfpDescriptorSet *set,
                                      uint8_t **out,
                                      size_t *out_len);

/**
 * Frees a buffer returned by [`dfp_descriptors_encode`].
 *
 * # Safety
 * `ptr`/`len` must come from one `dfp_descriptors_encode` call.
 */
void dfp_bytes_free(uint8_t *ptr, size_t len);

/**
 * Number of variants; 0 for NULL.
 *
 * # Safety
 * `set` must be NULL or a live handle.
 */
size_t dfp_descriptors_variants(const struct DfpDescriptorSet *set);

/**
 * Shape `(channels, grid_h, grid_w)` of one variant.
 *
 * # Safety
 * `set` must be a live handle; the out pointers must be writable.
 */
enum DfpStatus dfp_descriptors_shape(const struct DfpDescriptorSet *set,
                                     size_t variant,
                                     size_t *channels,
                                     size_t *grid_h,
                                     size_t *grid_w);

/**
 * # Safety
 * `set` must be NULL or a handle not yet freed.
 */
void dfp_descriptors_free(struct DfpDescriptorSet *set);

/**
 * Masked cosine score between variant `variant` of two sets.
 *
 * # Safety
 * `query` and `gallery` must be live handles; `out` writable.
 */
enum DfpStatus dfp_match_score(const struct DfpDescriptorSet *query,
                               const struct DfpDescriptorSet *gallery,
                               size_t variant,
                               double *out);

/**
 * Maximum of the per-variant scores; `best_variant` may be NULL.
 *
 * # Safety
 * `query` and `gallery` must be live handles; `fused` writable.
 */
enum DfpStatus dfp_match_fused(const struct DfpDescriptorSet *query,
                               const struct DfpDescriptorSet *gallery,
                               double *fused,
                               size_t *best_variant);

struct DfpGalleryBuilder *dfp_gallery_builder_new(void);

/**
 * Appends a copy of `set` under `id`. Validation happens in
 * [`dfp_gallery_build`].
 *
 * # Safety
 * `builder` and `set` must be live handles; `id` NUL-terminated.
 */
enum DfpStatus dfp_gallery_builder_add(struct DfpGalleryBuilder *builder,
                                       const char *id,
                                       const struct DfpDescriptorSet *set);

/**
 * Consumes the builder (even on failure) and builds a gallery.
 *
 * # Safety
 * `builder` must be a live handle, not used afterwards; `out` writable.
 */
enum DfpStatus dfp_gallery_build(struct DfpGalleryBuilder *builder, struct DfpGallery **out);

/**
 * # Safety
 * `builder` must be NULL or a handle not yet freed or built.
 */
void dfp_gallery_builder_free(struct DfpGalleryBuilder *builder);

/**
 * Number of enrolled ids; 0 for NULL.
 *
 * # Safety
 * `gallery` must be NULL or a live handle.
 */
size_t dfp_gallery_len(const struct DfpGallery *gallery);

/**
 * Id at insertion index `index`, owned by the gallery; NULL when out of
 * range.
 *
 * # Safety
 * `gallery` must be NULL or a live handle.
 */
const char *dfp_gallery_id(const struct DfpGallery *gallery, size_t index);

/**
 * Writes up to `min(top_k, capacity)` hits, best first, and their count.
 *
 * # Safety
 * `gallery`, `query` must be live handles; `results` must have room for
 * `capacity` entries; `n_results` writable.
 */
enum DfpStatus dfp_gallery_search(const struct DfpGallery *gallery,
                                  const struct DfpDescriptorSet *query,
                                  size_t top_k,
                                  struct DfpMatch *results,
                                  size_t capacity,
                                  size_t *n_results);

/**
 * # Safety
 * `gallery` must be NULL or a handle not yet freed.
 */
void dfp_gallery_free(struct DfpGallery *gallery);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DENSEFP_H */
