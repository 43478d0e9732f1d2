/* C ABI for the hexashrink multiresolution mesh codec.
 *
 * Conventions:
 *  - Fallible calls return hxs_status and write results through out
 *    pointers, which stay untouched on failure.
 *  - hxs_last_error() returns the message of the last failure on the
 *    calling thread, valid until the next failing call on that thread.
 *  - Buffers returned through (uint8_t**, size_t*) pairs are released with
 *    hxs_bytes_free; handles with their matching *_free. All free
 *    functions accept NULL.
 */
#ifndef HEXASHRINK_H
#define HEXASHRINK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque handles. */
typedef struct HxsModel HxsModel;
typedef struct HxsPyramid HxsPyramid;

/* Status codes, mirroring the CLI exit contract. */
typedef enum hxs_status {
  HXS_OK = 0,
  HXS_ERR_IO = 1,
  HXS_ERR_USAGE = 2,
  HXS_ERR_DATA = 3
} hxs_status;

/* Library version string; static storage, never freed. */
const char *hxs_version(void);

/* Message of the last error on this thread. */
const char *hxs_last_error(void);

/* Parse GRDECL text. geom_exp/prop_exp are fixed-point scale exponents
 * (10^e per unit), at most 9. */
int hxs_model_parse_grdecl(const uint8_t *data, size_t len, uint32_t geom_exp,
                           uint32_t prop_exp, HxsModel **out);

/* Generate a named synthetic fixture (flat8, smooth32, smooth64, histo64,
 * fault16, carved16, random12, interp24). */
int hxs_model_generate(const char *fixture, uint64_t seed, HxsModel **out);

void hxs_model_free(HxsModel *model);

/* Cell counts; dim pointers may be NULL to skip. */
void hxs_model_dims(const HxsModel *model, uint64_t *ni, uint64_t *nj,
                    uint64_t *nk);

/* Decompose `levels` steps with one codec for every payload kind:
 * "store", "deflate", "bwt-block", or "lz-markov". */
int hxs_model_decompose(const HxsModel *model, uint32_t levels,
                        const char *codec, HxsPyramid **out);

/* Render a model as GRDECL text (level-0 form; parses back bit-exactly). */
int hxs_model_write_grdecl(const HxsModel *model, uint8_t **out,
                           size_t *out_len);

void hxs_pyramid_free(HxsPyramid *pyramid);

/* Stored decomposition depth. */
uint32_t hxs_pyramid_levels(const HxsPyramid *pyramid);

/* Container bytes (.hxs). */
int hxs_pyramid_serialize(const HxsPyramid *pyramid, uint8_t **out,
                          size_t *out_len);
int hxs_pyramid_deserialize(const uint8_t *data, size_t len,
                            HxsPyramid **out);

/* Reconstruct level t in [-levels, 0]; 0 is the bit-exact original. */
int hxs_pyramid_reconstruct(const HxsPyramid *pyramid, int32_t level,
                            HxsModel **out);

/* Reconstruct one level and render it as GRDECL in one call. */
int hxs_pyramid_reconstruct_grdecl(const HxsPyramid *pyramid, int32_t level,
                                   uint8_t **out, size_t *out_len);

/* Reconstruct one level and render it as a legacy-text VTK grid. */
int hxs_pyramid_export_vtk(const HxsPyramid *pyramid, int32_t level,
                           int keep_inactive, uint8_t **out, size_t *out_len);

/* Release a buffer returned by this library. */
void hxs_bytes_free(uint8_t *data, size_t len);

#ifdef __cplusplus
}
#endif

#endif /* HEXASHRINK_H */
