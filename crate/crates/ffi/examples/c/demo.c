/* Runs the built-in configuration through the proposed policy and prints
 * the summary, then drives a controller for a few slots by hand. */
#include <stdio.h>

#include "semcom.h"

static int check(SemcomStatus s, const char *what) {
    if (s != SEMCOM_STATUS_OK) {
        const char *msg = semcom_last_error();
        fprintf(stderr, "%s failed (%d): %s\n", what, (int)s, msg ? msg : "?");
        return 1;
    }
    return 0;
}

int main(void) {
    SemcomConfig *cfg = NULL;
    SemcomRun *run = NULL;
    SemcomController *ctl = NULL;
    SemcomSummary sum;
    size_t n = 0;
    int rc = 1;

    printf("semcom %s\n", semcom_version());
    if (check(semcom_config_default(&cfg), "config_default")) goto done;
    if (check(semcom_config_set_slots(cfg, 100), "set_slots")) goto done;
    if (check(semcom_config_num_users(cfg, &n), "num_users")) goto done;

    if (check(semcom_simulate(cfg, "proposed", &run), "simulate")) goto done;
    if (check(semcom_run_summary(run, &sum), "run_summary")) goto done;
    printf("slots %llu users %llu satisfaction %.2f%% latency %.2f ms objective %.2f\n",
           (unsigned long long)sum.slots, (unsigned long long)sum.users,
           sum.avg_satisfaction_pct, sum.avg_latency_ms, sum.objective);

    if (check(semcom_controller_new(cfg, &ctl), "controller_new")) goto done;
    {
        double snr[4] = {18.0, 21.0, 24.0, 20.0};
        double cr[4], q[4];
        for (unsigned t = 0; t < 5; t++) {
            if (check(semcom_controller_decide(ctl, t, snr, n, cr), "decide")) goto done;
            for (size_t k = 0; k < n; k++) q[k] = 30.0 + 10.0 * cr[k];
            if (check(semcom_controller_observe(ctl, t, snr, cr, q, n), "observe")) goto done;
            printf("t=%u cr=[%.3f %.3f %.3f %.3f]\n", t, cr[0], cr[1], cr[2], cr[3]);
        }
    }

    if (semcom_simulate(cfg, "drl_sac", &run) == SEMCOM_STATUS_CONFIG)
        printf("expected error: %s\n", semcom_last_error());
    rc = 0;

done:
    semcom_controller_free(ctl);
    semcom_run_free(run);
    semcom_config_free(cfg);
    return rc;
}
