/* SPDX-License-Identifier: Apache-2.0 */
/* Compiles as plain C99 and exercises the handful of entry points that
 * need no filesystem setup, proving the header works from C. */
#include <stdio.h>
#include <string.h>

#include "awemet.h"

int main(void) {
  const char* version = awemet_version();
  if (version == NULL || strlen(version) == 0) {
    fprintf(stderr, "missing version string\n");
    return 1;
  }

  double scores[3] = {0.9, 0.5, 0.1};
  int32_t labels[3] = {1, 0, 1};
  double ap = 0.0;
  if (awemet_average_precision(scores, labels, 3, &ap) != AWEMET_OK) {
    fprintf(stderr, "average_precision failed: %s\n", awemet_last_error());
    return 1;
  }
  if (ap < 0.83 || ap > 0.84) { /* (1 + 2/3) / 2 */
    fprintf(stderr, "unexpected ap %f\n", ap);
    return 1;
  }

  if (awemet_average_precision(NULL, labels, 3, &ap) != AWEMET_ERR_USAGE ||
      strlen(awemet_last_error()) == 0) {
    fprintf(stderr, "null scores should be a usage error\n");
    return 1;
  }

  double a[4] = {1.0, 0.0, 0.0, 1.0}; /* two 2-dim frames, column-major */
  double sim = 1.0;
  if (awemet_dtw_similarity(a, 2, 2, a, 2, &sim) != AWEMET_OK || sim != 0.0) {
    fprintf(stderr, "self-alignment should cost nothing\n");
    return 1;
  }

  printf("c header check ok (version %s)\n", version);
  return 0;
}
