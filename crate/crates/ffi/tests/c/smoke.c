#include <math.h>
#include <stdio.h>
#include <string.h>

#include "gnomon.h"

#define CHECK(c)                                                   \
    do {                                                           \
        if (!(c)) {                                                \
            fprintf(stderr, "line %d: %s\n", __LINE__, #c);        \
            return 1;                                              \
        }                                                          \
    } while (0)

int main(void) {
    GnomonSystem *sys = NULL;
    CHECK(gnomon_system_new(GNOMON_KIND_OSCILLATOR, 0.0, 0.0, &sys) == GNOMON_STATUS_OK);
    double e = 0.0;
    CHECK(gnomon_energy_level(sys, 0, 0, &e) == GNOMON_STATUS_OK);
    CHECK(e == 1.0);
    gnomon_system_free(sys);

    CHECK(gnomon_system_new(GNOMON_KIND_COULOMB, 0.0, 0.375, &sys) == GNOMON_STATUS_OK);
    double a = 0.0;
    CHECK(gnomon_alpha(sys, 1.0, &a) == GNOMON_STATUS_OK);
    CHECK(fabs(a - 0.5) < 1e-15);
    CHECK(gnomon_alpha(sys, 0.5, &a) == GNOMON_STATUS_IMAGINARY_ALPHA);
    CHECK(strncmp(gnomon_last_error(), "ERR_IMAGINARY_ALPHA", 19) == 0);

    GnomonState s0 = {2.0, 0.0, 0.0, 0.5};
    GnomonTrajectory *traj = NULL;
    CHECK(gnomon_integrate(sys, s0, 50.0, 1e-10, &traj) == GNOMON_STATUS_OK);
    size_t n = gnomon_trajectory_len(traj);
    CHECK(n > 10);
    GnomonSample last;
    CHECK(gnomon_trajectory_sample(traj, n - 1, &last) == GNOMON_STATUS_OK);
    CHECK(fabs(last.lz - 1.0) < 1e-9);
    gnomon_trajectory_free(traj);
    gnomon_system_free(sys);

    printf("ok\n");
    return 0;
}
