#include <stdio.h>
#include <stdlib.h>
#include "fbkan.h"

int main(void) {
    FbkanModel *m = NULL;
    if (fbkan_model_from_preset("data1-L4", 3, &m) != FBKAN_STATUS_OK) {
        char buf[256];
        fbkan_last_error(buf, sizeof buf);
        fprintf(stderr, "from_preset: %s\n", buf);
        return 1;
    }
    double x[3] = {-0.5, 0.0, 0.5};
    double y[3];
    if (fbkan_model_predict(m, x, 3, 1, y) != FBKAN_STATUS_OK) return 2;
    double v, d, dd;
    if (fbkan_model_jet(m, &x[2], 1, &v, &d, &dd) != FBKAN_STATUS_OK) return 3;
    if (v != y[2]) return 4;
    if (fbkan_model_predict(m, x, 3, 2, y) != FBKAN_STATUS_INVALID_ARGUMENT) return 5;
    if (fbkan_last_error(NULL, 0) == 0) return 6;
    printf("%zu %.17g %.17g %.17g\n", fbkan_model_param_count(m), v, d, dd);
    fbkan_model_free(m);
    return 0;
}
