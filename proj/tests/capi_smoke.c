/* Plain C consumer: the header must compile as C and the library must link alone. */
#include "causal_energy/causal_energy.h"

#include <stdio.h>

int main(void) {
    double a[6] = {1, 2, 3, 4, 5, 6};
    double b[6] = {2, 3, 4, 5, 6, 8};
    double w = 0, p = 0;
    ce_frame* frame = NULL;
    char* meta = NULL;

    if (ce_wilcoxon_signed_rank(a, b, 6, CE_ALT_LESS, &w, &p) != CE_OK || p != 0.015625) {
        fprintf(stderr, "wilcoxon: %s (p=%g)\n", ce_last_error(), p);
        return 1;
    }
    if (ce_synth("{\"kind\": \"gaussian-pair\", \"rho\": 0.5, \"n\": 50}", &frame, &meta) != CE_OK) {
        fprintf(stderr, "synth: %s\n", ce_last_error());
        return 1;
    }
    if (ce_frame_rows(frame) != 50) return 1;
    ce_frame_free(frame);
    ce_string_free(meta);
    printf("causal_energy %s ok\n", ce_version());
    return 0;
}
