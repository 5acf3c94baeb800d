#ifndef DUALHODGE_H
#define DUALHODGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DUALHODGE_BUILDING)
#    define DH_API __declspec(dllexport)
#  else
#    define DH_API __declspec(dllimport)
#  endif
#else
#  define DH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dh_status {
    DH_OK = 0,
    DH_ERR_INVALID_ARGUMENT = 1,
    DH_ERR_PARSE = 2,
    DH_ERR_IO = 3,
    DH_ERR_DEGENERATE_CELL = 4,
    DH_ERR_NOT_POSITIVE_DEFINITE = 5,
    DH_ERR_NOT_CONVERGED = 6,
    DH_ERR_INTERNAL = 7
} dh_status;

typedef struct dh_mesh dh_mesh;
typedef struct dh_solution dh_solution;

/* Message of the last failed call on this thread ("" if none). */
DH_API const char* dh_last_error(void);
DH_API const char* dh_status_string(dh_status status);
/* Frees strings returned through char** out-parameters. */
DH_API void dh_string_free(char* s);

/* ---- meshes ---- */

/* format: "simple" or "msh2". */
DH_API dh_status dh_mesh_load(const char* path, const char* format, dh_mesh** out);

/* geometry: "unit_box", "series_box", "parallel_box" or
 * "square_resistor_eighth" (aliases "uniform", "series", "parallel",
 * "square_resistor"). */
typedef struct dh_benchmark_spec {
    const char* geometry;
    int level;
    double jitter; /* fraction of the mesh size, interior nodes only */
    uint64_t seed;
    double voltage;
    double sigma1;
    double sigma2;
} dh_benchmark_spec;

DH_API void dh_benchmark_spec_init(dh_benchmark_spec* spec);
DH_API dh_status dh_mesh_generate(const dh_benchmark_spec* spec, dh_mesh** out);
DH_API dh_status dh_mesh_write_simple(const dh_mesh* mesh, const char* path);
DH_API void dh_mesh_destroy(dh_mesh* mesh);

typedef struct dh_mesh_info {
    int64_t nodes;
    int64_t edges;
    int64_t faces;
    int64_t cells;
    int64_t boundary_faces;
} dh_mesh_info;

DH_API dh_status dh_mesh_get_info(const dh_mesh* mesh, dh_mesh_info* info);

/* CSV "identity,worst_residual,location,checked" over all identity families.
 * worst receives the largest residual (may be NULL). */
DH_API dh_status dh_check_identities(const dh_mesh* mesh, char** csv, double* worst);

/* ---- materials and solves ---- */

/* Conductivity tensor (row-major, symmetric positive definite) of all cells
 * carrying tag. */
typedef struct dh_material {
    int tag;
    double sigma[9];
} dh_material;

/* Boundary faces carrying tag, held at voltage. The first electrode is the
 * 0 V reference. */
typedef struct dh_electrode {
    int tag;
    double voltage;
} dh_electrode;

typedef struct dh_solve_options {
    const char* formulation;   /* "sp" or "dsp" */
    const char* material_mode; /* "piecewise" (hybrid) or "weighted" */
    double tol;
    int max_iter;              /* 0: automatic */
    double stab_scale;
} dh_solve_options;

DH_API void dh_solve_options_init(dh_solve_options* options);

/* With num_materials == 0 every cell gets unit conductivity; otherwise every
 * cell tag must be listed. */
DH_API dh_status dh_solve(const dh_mesh* mesh, const dh_material* materials, size_t num_materials,
                          const dh_electrode* electrodes, size_t num_electrodes,
                          const dh_solve_options* options, dh_solution** out);
DH_API void dh_solution_destroy(dh_solution* solution);

typedef struct dh_solution_summary {
    double applied_voltage;
    double current;
    double power;
    double conductance;
    double conductance_power;
    double relative_residual;
    double conservation_residual;
    double circuital_residual;
    int iterations;
} dh_solution_summary;

DH_API dh_status dh_solution_get_summary(const dh_solution* solution, dh_solution_summary* out);
/* Potentials per node (sp) or per cell (dsp). With out == NULL only the count
 * is returned. */
DH_API dh_status dh_solution_get_potentials(const dh_solution* solution, double* out, size_t capacity,
                                            size_t* count);
/* Per-cell E and J, 3 values each per cell. */
DH_API dh_status dh_solution_get_cell_fields(const dh_solution* solution, double* E, double* J,
                                             size_t num_cells);
/* One line per cell: "cell Ex Ey Ez Jx Jy Jz". */
DH_API dh_status dh_solution_write_fields(const dh_solution* solution, const char* path);

/* Writes one global operator in 1-based coordinate format. which: "me", "mf",
 * "met" (dual edges, per face) or "mft" (dual faces, per edge). */
DH_API dh_status dh_export_matrix(const dh_mesh* mesh, const dh_material* materials,
                                  size_t num_materials, const char* material_mode, const char* which,
                                  const char* path, int64_t* nnz);

/* ---- benchmarks ---- */

typedef struct dh_patch_report {
    int64_t cells;
    double conductance;
    double conductance_power;
    double expected_conductance;
    double potential_deviation;
    double field_deviation;
    double tangential_E_jump;
    double normal_J_jump;
    double conservation_residual;
    double circuital_residual;
    int iterations;
    int passed;
} dh_patch_report;

/* Box benchmarks only; options->formulation and material_mode select the run. */
DH_API dh_status dh_patch_test(const dh_benchmark_spec* spec, const dh_solve_options* options,
                               double threshold, dh_patch_report* out);

/* Square resistor study over the given levels; formulations is a comma list
 * such as "sp,dsp". Returns the report CSV and the two bound checks (may be
 * NULL). */
DH_API dh_status dh_square_resistor_study(const int* levels, size_t num_levels,
                                          const char* formulations, const dh_solve_options* options,
                                          int timing, char** csv, int* sp_upper_bound,
                                          int* dsp_error_decreasing);

#ifdef __cplusplus
}
#endif

#endif
