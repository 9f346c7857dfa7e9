#include <math.h>
#include <stdio.h>
#include "exptest.h"

static const double PYKE[31] = {20, 106, 14, 78, 94, 20, 21, 136, 56, 232, 89, 33, 181, 424, 14, 430,
                                155, 205, 117, 253, 86, 260, 213, 58, 276, 263, 246, 341, 1105, 50, 136};

int main(void) {
    ExptestSample *s = NULL;
    double m = 0.0;
    if (exptest_sample_new(PYKE, 31, &s) != EXPTEST_STATUS_OK) return 1;
    if (exptest_sample_len(s) != 31) return 2;
    if (exptest_statistic(s, 1.0, &m) != EXPTEST_STATUS_OK) return 3;
    if (fabs(m - 6.0674e-4) > 1e-7) return 4;

    ExptestOutcome o;
    if (exptest_test(s, 1.0, 0.05, 1000, 7, &o) != EXPTEST_STATUS_OK) return 5;
    if (o.reject || o.p_value < 0.2) return 6;
    exptest_sample_free(s);

    const double bad[2] = {1.0, -1.0};
    s = NULL;
    if (exptest_sample_new(bad, 2, &s) != EXPTEST_STATUS_INVALID_INPUT || s != NULL) return 7;
    if (exptest_last_error() == NULL) return 8;

    printf("statistic %.6e p-value %.3f\n", m, o.p_value);
    return 0;
}
