/* Build: cc baseline.c -I../../include -L<target>/release -l:libepimacro_ffi.a -lm -lpthread -ldl */
#include <stdio.h>
#include <stdlib.h>
#include "epimacro.h"

static int check(EpmStatus s) {
    if (s != EPM_STATUS_OK) {
        const char *msg = epm_last_error();
        fprintf(stderr, "error %d: %s\n", (int)s, msg ? msg : "?");
        exit(1);
    }
    return 0;
}

int main(void) {
    EpmParams *params = NULL;
    EpmTrajectory *ref = NULL, *run = NULL;
    check(epm_params_default(&params));
    check(epm_run_preset(params, "no-pandemic", &ref));
    check(epm_run_policy(params, "2020-05-21", 0.10, 26, &run));

    EpmSummary s;
    check(epm_trajectory_summary(run, ref, &s));
    printf("deaths %.4e, peak %.4e on day %lld, max output drop %.1f%%\n",
           s.total_deaths, s.peak_active_infections, (long long)s.peak_day, s.max_output_drop_pct);

    size_t n = 0;
    check(epm_trajectory_len(run, &n));
    double *c = malloc(n * sizeof *c);
    check(epm_trajectory_column(run, "C", c, n));
    printf("consumption on the last day: %.4e\n", c[n - 1]);
    free(c);

    epm_trajectory_free(run);
    epm_trajectory_free(ref);
    epm_params_free(params);
    return 0;
}
