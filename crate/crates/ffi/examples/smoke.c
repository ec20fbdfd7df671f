/* Loads a run, samples a hull and prints the first row. */
#include <stdio.h>

#include "nearopt.h"

int main(int argc, char **argv) {
    if (argc < 2) {
        fprintf(stderr, "usage: %s <hull.json>\n", argv[0]);
        return 2;
    }
    double a = 0.0;
    if (nearopt_annuity(0.07, 25, &a) != NEAROPT_STATUS_OK) {
        fprintf(stderr, "%s\n", nearopt_last_error());
        return 1;
    }
    printf("nearopt %s, annuity(7%%, 25 a) = %.6f\n", nearopt_version(), a);

    NearoptSamples *s = NULL;
    if (nearopt_samples_from_hull(argv[1], 10, 42, &s) != NEAROPT_STATUS_OK) {
        fprintf(stderr, "%s\n", nearopt_last_error());
        return 1;
    }
    size_t cols = nearopt_samples_cols(s);
    const double *data = nearopt_samples_data(s);
    for (size_t j = 0; j < cols; j++) {
        char *name = NULL;
        nearopt_samples_variable(s, j, &name);
        printf("%s = %.4f\n", name, data[j]);
        nearopt_string_free(name);
    }
    nearopt_samples_free(s);
    return 0;
}
