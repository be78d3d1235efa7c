#include <math.h>
#include <stdio.h>
#include "socint.h"

int main(void) {
    double probs[2] = {0.89, 0.11};
    SocintDistribution *d = NULL;
    SocintTable *t = NULL;
    double h = 0.0, log_m = 0.0, code = 0.0, ext = 0.0, delta = 0.0;
    if (socint_distribution_new(probs, 2, &d) != SOCINT_STATUS_OK) return 1;
    if (socint_distribution_entropy(d, &h) != SOCINT_STATUS_OK) return 2;
    if (fabs(h - 0.346515) > 1e-6) return 3;
    if (socint_table_new(d, 16, &t) != SOCINT_STATUS_OK) return 4;
    if (socint_min_log_code_size(t, 0.1, &log_m) != SOCINT_STATUS_OK) return 5;
    if (socint_joint_pair(t, h, 0.0, &code, &ext, &delta) != SOCINT_STATUS_OK) return 6;
    if (code + ext < delta - 1e-12) return 7;
    if (socint_table_new(NULL, 4, &t) != SOCINT_STATUS_NULL_POINTER) return 8;
    printf("%s %.6f %.6f\n", socint_last_error(), h, log_m);
    socint_table_free(t);
    socint_distribution_free(d);
    return 0;
}
