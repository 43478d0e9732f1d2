/* Minimal consumer of the C API: generate, decompose, round-trip, compare. */
#include "hexashrink.h"
#include <stdio.h>
#include <string.h>

int main(void) {
  HxsModel *model = NULL;
  if (hxs_model_generate("flat8", 1, &model) != HXS_OK) {
    fprintf(stderr, "generate: %s\n", hxs_last_error());
    return 1;
  }
  uint64_t ni = 0, nj = 0, nk = 0;
  hxs_model_dims(model, &ni, &nj, &nk);
  if (ni != 8 || nj != 8 || nk != 4) return 2;

  uint8_t *text = NULL;
  size_t text_len = 0;
  if (hxs_model_write_grdecl(model, &text, &text_len) != HXS_OK) return 3;

  HxsPyramid *pyr = NULL;
  if (hxs_model_decompose(model, 2, "deflate", &pyr) != HXS_OK) return 4;
  if (hxs_pyramid_levels(pyr) != 2) return 5;

  uint8_t *container = NULL;
  size_t container_len = 0;
  if (hxs_pyramid_serialize(pyr, &container, &container_len) != HXS_OK) return 6;

  HxsPyramid *back = NULL;
  if (hxs_pyramid_deserialize(container, container_len, &back) != HXS_OK) return 7;

  uint8_t *restored = NULL;
  size_t restored_len = 0;
  if (hxs_pyramid_reconstruct_grdecl(back, 0, &restored, &restored_len) != HXS_OK)
    return 8;
  if (restored_len != text_len || memcmp(restored, text, text_len) != 0) return 9;

  hxs_bytes_free(text, text_len);
  hxs_bytes_free(container, container_len);
  hxs_bytes_free(restored, restored_len);
  hxs_pyramid_free(pyr);
  hxs_pyramid_free(back);
  hxs_model_free(model);
  printf("c smoke ok (version %s)\n", hxs_version());
  return 0;
}
