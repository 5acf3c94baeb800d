/* Exercises the C interface end to end: generate, solve, query, fail cleanly. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "dualhodge.h"

static int failures = 0;

#define CHECK(cond)                                                        \
    do {                                                                   \
        if (!(cond)) {                                                     \
            fprintf(stderr, "%s:%d: check failed: %s (%s)\n", __FILE__,    \
                    __LINE__, #cond, dh_last_error());                     \
            ++failures;                                                    \
        }                                                                  \
    } while (0)

static void isotropic(dh_material* m, int tag, double sigma)
{
    memset(m, 0, sizeof *m);
    m->tag = tag;
    m->sigma[0] = m->sigma[4] = m->sigma[8] = sigma;
}

int main(void)
{
    dh_benchmark_spec spec;
    dh_benchmark_spec_init(&spec);
    spec.geometry = "series";
    spec.level = 2;
    spec.jitter = 0.1;
    spec.seed = 3;

    dh_mesh* mesh = NULL;
    CHECK(dh_mesh_generate(&spec, &mesh) == DH_OK);
    dh_mesh_info info;
    CHECK(dh_mesh_get_info(mesh, &info) == DH_OK);
    CHECK(info.cells == 48 && info.nodes == 27);
    CHECK(info.nodes - info.edges + info.faces - info.cells == 1);

    char* csv = NULL;
    double worst = 1.0;
    CHECK(dh_check_identities(mesh, &csv, &worst) == DH_OK);
    CHECK(csv && strncmp(csv, "identity,worst_residual,location,checked", 40) == 0);
    CHECK(worst < 1e-12);
    dh_string_free(csv);

    dh_material mats[2];
    isotropic(&mats[0], 1, 1.0);
    isotropic(&mats[1], 2, 2.0);
    const dh_electrode electrodes[2] = {{1, 0.0}, {2, 1.0}};
    dh_solve_options opts;
    dh_solve_options_init(&opts);
    opts.tol = 1e-12;

    const char* formulations[2] = {"sp", "dsp"};
    for (int k = 0; k < 2; ++k) {
        opts.formulation = formulations[k];
        dh_solution* sol = NULL;
        CHECK(dh_solve(mesh, mats, 2, electrodes, 2, &opts, &sol) == DH_OK);
        dh_solution_summary s;
        CHECK(dh_solution_get_summary(sol, &s) == DH_OK);
        CHECK(fabs(s.conductance - 4.0 / 3.0) < 1e-9);
        CHECK(fabs(s.conductance_power - 4.0 / 3.0) < 1e-9);
        size_t count = 0;
        CHECK(dh_solution_get_potentials(sol, NULL, 0, &count) == DH_OK);
        CHECK(count == (size_t)(k == 0 ? info.nodes : info.cells));
        double small[1];
        CHECK(dh_solution_get_potentials(sol, small, 1, &count) == DH_ERR_INVALID_ARGUMENT);
        double* E = malloc(sizeof(double) * 3 * (size_t)info.cells);
        double* J = malloc(sizeof(double) * 3 * (size_t)info.cells);
        CHECK(dh_solution_get_cell_fields(sol, E, J, (size_t)info.cells) == DH_OK);
        for (int64_t c = 0; c < info.cells; ++c)
            CHECK(fabs(J[3 * c] + 4.0 / 3.0) < 1e-8);
        free(E);
        free(J);
        dh_solution_destroy(sol);
    }

    /* A missing material tag is an error, not a default. */
    dh_solution* bad = NULL;
    CHECK(dh_solve(mesh, mats, 1, electrodes, 2, &opts, &bad) == DH_ERR_INVALID_ARGUMENT);
    CHECK(bad == NULL);
    CHECK(strlen(dh_last_error()) > 0);
    opts.formulation = "fem";
    CHECK(dh_solve(mesh, mats, 2, electrodes, 2, &opts, &bad) == DH_ERR_INVALID_ARGUMENT);
    dh_mesh* missing = NULL;
    CHECK(dh_mesh_load("/nonexistent/mesh.txt", "simple", &missing) == DH_ERR_IO);
    CHECK(missing == NULL);
    CHECK(strcmp(dh_status_string(DH_ERR_NOT_CONVERGED), dh_status_string(DH_OK)) != 0);

    dh_patch_report report;
    dh_solve_options_init(&opts);
    opts.tol = 1e-12;
    CHECK(dh_patch_test(&spec, &opts, 1e-9, &report) == DH_OK);
    CHECK(report.passed == 1);
    opts.material_mode = "weighted";
    CHECK(dh_patch_test(&spec, &opts, 1e-9, &report) == DH_OK);
    CHECK(report.passed == 0);

    dh_mesh_destroy(mesh);
    if (failures)
        fprintf(stderr, "%d check(s) failed\n", failures);
    else
        printf("C interface smoke test passed\n");
    return failures ? 1 : 0;
}
