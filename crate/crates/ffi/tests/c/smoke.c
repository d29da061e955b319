#include <stdio.h>
#include <math.h>
#include "mlc.h"

int main(void) {
    MlcMesh *mesh = NULL;
    if (mlc_mesh_generate(2, 0, &mesh) != MLC_STATUS_OK) {
        fprintf(stderr, "generate: %s\n", mlc_last_error());
        return 10;
    }
    if (mlc_mesh_euler_characteristic(mesh) != -2) return 11;

    MlcSolution *sol = NULL;
    if (mlc_solve(mesh, NULL, 0, NULL, 0, 0.0, &sol) != MLC_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", mlc_last_error());
        return 12;
    }
    MlcReport r;
    if (mlc_solution_report(sol, &r) != MLC_STATUS_OK) return 13;
    if (!(r.area_identity_residual <= 1e-6)) return 14;
    if (fabs(r.minmax_value + 8.0 * M_PI) > 1e-6) return 15;

    char *json = NULL;
    if (mlc_solution_report_json(sol, &json) != MLC_STATUS_OK) return 16;
    printf("%s\n", json);
    mlc_string_free(json);

    double small[3];
    if (mlc_solution_factor(sol, small, 3) != MLC_STATUS_PRECONDITION) return 17;
    if (mlc_last_error() == NULL) return 18;

    mlc_solution_free(sol);
    mlc_mesh_free(mesh);
    if (mlc_solve(NULL, NULL, 0, NULL, 0, 0.0, &sol) != MLC_STATUS_NULL_POINTER) return 19;
    return 0;
}
