#include <math.h>
#include <stdio.h>
#include <string.h>

#include "tgv.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, tgv_last_error_message());                 \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    TgvConfig cfg;
    CHECK(tgv_config_default(&cfg) == TGV_STATUS_OK);
    cfg.n = 16;
    cfg.dt = 0.01;

    TgvSolver *s = NULL;
    CHECK(tgv_solver_create(&cfg, &s) == TGV_STATUS_OK);
    double e0 = 0.0, e1 = 0.0, t = 0.0, ln = 0.0;
    CHECK(tgv_solver_energy(s, &e0) == TGV_STATUS_OK);
    CHECK(fabs(e0 - 0.125) < 1e-14);
    CHECK(tgv_solver_step(s, 4) == TGV_STATUS_OK);
    CHECK(tgv_solver_time(s, &t) == TGV_STATUS_OK);
    CHECK(fabs(t - 0.04) < 1e-15);
    CHECK(tgv_solver_energy(s, &e1) == TGV_STATUS_OK);
    CHECK(e1 < e0);
    CHECK(tgv_solver_log_sup_norm(s, 200, &ln) == TGV_STATUS_OK);
    CHECK(isfinite(ln));
    tgv_solver_free(s);

    cfg.n = 9;
    CHECK(tgv_solver_create(&cfg, &s) == TGV_STATUS_CONFIG);
    CHECK(strlen(tgv_last_error_message()) > 0);

    TgvScaleReport r;
    CHECK(tgv_scale_comparison(3.0, 10, 0.89, &r) == TGV_STATUS_OK);
    CHECK(r.dominant);
    CHECK(tgv_epsilon_2k(1, 1.0) == 8.0);
    printf("ok %s\n", tgv_version());
    return 0;
}
