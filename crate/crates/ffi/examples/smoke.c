#include <stdio.h>
#include "foxh_kit.h"

int main(void) {
    FoxhParams *p = NULL;
    double v = 0.0;
    if (foxh_params_new(2.0, 0.5, 1.5, 2.5, 1, 100.0, &p) != FOXH_STATUS_OK) {
        fprintf(stderr, "%s\n", foxh_last_error_message());
        return 1;
    }
    if (foxh_sep(p, "bpsk", &v) != FOXH_STATUS_OK) {
        fprintf(stderr, "%s\n", foxh_last_error_message());
        return 1;
    }
    printf("BPSK SEP at 20 dB: %.6e\n", v);
    foxh_params_free(p);
    return 0;
}
