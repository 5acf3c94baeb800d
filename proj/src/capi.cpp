#include "dualhodge.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <new>
#include <sstream>

#include "dualhodge/benchmark.hpp"
#include "dualhodge/dualgeom.hpp"
#include "dualhodge/mesh_io.hpp"

using namespace dualhodge;

struct dh_mesh {
    TetMesh mesh;
};

struct dh_solution {
    SolveResult result;
};

namespace {

thread_local std::string g_last_error;

dh_status to_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return DH_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return DH_ERR_PARSE;
    case ErrorCode::Io: return DH_ERR_IO;
    case ErrorCode::DegenerateCell: return DH_ERR_DEGENERATE_CELL;
    case ErrorCode::NotPositiveDefinite: return DH_ERR_NOT_POSITIVE_DEFINITE;
    case ErrorCode::NotConverged: return DH_ERR_NOT_CONVERGED;
    }
    return DH_ERR_INTERNAL;
}

/// Runs f, translating exceptions into a status and the thread's last error.
template <class F>
dh_status guarded(F&& f)
{
    try {
        f();
        g_last_error.clear();
        return DH_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return DH_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return DH_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return DH_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what)
{
    if (!ok)
        throw Error(ErrorCode::InvalidArgument, what);
}

char* copy_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

BenchmarkSpec to_spec(const dh_benchmark_spec* s)
{
    require(s != nullptr, "benchmark spec is null");
    require(s->geometry != nullptr, "benchmark geometry is null");
    BenchmarkSpec spec;
    spec.geometry = parse_geometry(s->geometry);
    spec.level = s->level;
    spec.jitter = s->jitter;
    spec.seed = s->seed;
    spec.voltage = s->voltage;
    spec.sigma1 = s->sigma1;
    spec.sigma2 = s->sigma2;
    spec.validate();
    return spec;
}

std::vector<MaterialTensor> cell_materials(const TetMesh& mesh, const dh_material* materials,
                                           std::size_t count)
{
    require(count == 0 || materials != nullptr, "materials pointer is null");
    std::map<int, MaterialTensor> by_tag;
    for (std::size_t i = 0; i < count; ++i) {
        MaterialTensor t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                t.K(r, c) = materials[i].sigma[3 * r + c];
        t.validate();
        if (!by_tag.emplace(materials[i].tag, t).second)
            throw Error(ErrorCode::InvalidArgument,
                        "material tag " + std::to_string(materials[i].tag) + " listed twice");
    }
    std::vector<MaterialTensor> K(mesh.num_cells(), MaterialTensor::isotropic(1.0));
    if (count == 0)
        return K;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const auto it = by_tag.find(mesh.cell_tag(c));
        if (it == by_tag.end())
            throw Error(ErrorCode::InvalidArgument, "no material given for cell tag " +
                                                        std::to_string(mesh.cell_tag(c)));
        K[c] = it->second;
    }
    return K;
}

SolverOptions to_options(const dh_solve_options* o)
{
    SolverOptions opts;
    if (!o)
        return opts;
    require(o->tol > 0 && o->tol < 1, "tolerance must lie in (0, 1)");
    require(o->max_iter >= 0, "max_iter must be nonnegative");
    require(o->stab_scale > 0, "stabilization scale must be positive");
    opts.tol = o->tol;
    opts.max_iter = o->max_iter;
    opts.stab.scale = o->stab_scale;
    if (o->material_mode)
        opts.material_mode = parse_material_mode(o->material_mode);
    return opts;
}

Formulation formulation_of(const dh_solve_options* o)
{
    return o && o->formulation ? parse_formulation(o->formulation) : Formulation::DSP;
}

} // namespace

extern "C" {

const char* dh_last_error(void)
{
    return g_last_error.c_str();
}

const char* dh_status_string(dh_status status)
{
    switch (status) {
    case DH_OK: return "ok";
    case DH_ERR_INVALID_ARGUMENT: return "invalid argument";
    case DH_ERR_PARSE: return "parse error";
    case DH_ERR_IO: return "i/o error";
    case DH_ERR_DEGENERATE_CELL: return "degenerate cell";
    case DH_ERR_NOT_POSITIVE_DEFINITE: return "not positive definite";
    case DH_ERR_NOT_CONVERGED: return "not converged";
    case DH_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void dh_string_free(char* s)
{
    std::free(s);
}

dh_status dh_mesh_load(const char* path, const char* format, dh_mesh** out)
{
    return guarded([&] {
        require(path && format && out, "null argument to dh_mesh_load");
        *out = nullptr;
        *out = new dh_mesh{load_mesh(path, parse_mesh_format(format))};
    });
}

void dh_benchmark_spec_init(dh_benchmark_spec* spec)
{
    if (!spec)
        return;
    const BenchmarkSpec d;
    spec->geometry = "unit_box";
    spec->level = d.level;
    spec->jitter = d.jitter;
    spec->seed = d.seed;
    spec->voltage = d.voltage;
    spec->sigma1 = d.sigma1;
    spec->sigma2 = d.sigma2;
}

dh_status dh_mesh_generate(const dh_benchmark_spec* spec, dh_mesh** out)
{
    return guarded([&] {
        require(out != nullptr, "null output for dh_mesh_generate");
        *out = nullptr;
        *out = new dh_mesh{generate_mesh(to_spec(spec))};
    });
}

dh_status dh_mesh_write_simple(const dh_mesh* mesh, const char* path)
{
    return guarded([&] {
        require(mesh && path, "null argument to dh_mesh_write_simple");
        write_simple(mesh->mesh, std::string(path));
    });
}

void dh_mesh_destroy(dh_mesh* mesh)
{
    delete mesh;
}

dh_status dh_mesh_get_info(const dh_mesh* mesh, dh_mesh_info* info)
{
    return guarded([&] {
        require(mesh && info, "null argument to dh_mesh_get_info");
        const TetMesh& m = mesh->mesh;
        info->nodes = m.num_nodes();
        info->edges = m.num_edges();
        info->faces = m.num_faces();
        info->cells = m.num_cells();
        info->boundary_faces = static_cast<int64_t>(m.boundary_faces().size());
    });
}

dh_status dh_check_identities(const dh_mesh* mesh, char** csv, double* worst)
{
    return guarded([&] {
        require(mesh && csv, "null argument to dh_check_identities");
        *csv = nullptr;
        const auto residuals = check_identities(mesh->mesh);
        std::ostringstream out;
        out << "identity,worst_residual,location,checked\n";
        double w = 0.0;
        char buf[64];
        for (const auto& r : residuals) {
            std::snprintf(buf, sizeof buf, "%.3e", r.worst);
            out << r.name << ',' << buf << ',' << r.location << ',' << r.checked << '\n';
            w = std::max(w, r.worst);
        }
        if (worst)
            *worst = w;
        *csv = copy_string(out.str());
    });
}

void dh_solve_options_init(dh_solve_options* options)
{
    if (!options)
        return;
    const SolverOptions d;
    options->formulation = "dsp";
    options->material_mode = "piecewise";
    options->tol = d.tol;
    options->max_iter = d.max_iter;
    options->stab_scale = d.stab.scale;
}

dh_status dh_solve(const dh_mesh* mesh, const dh_material* materials, size_t num_materials,
                   const dh_electrode* electrodes, size_t num_electrodes,
                   const dh_solve_options* options, dh_solution** out)
{
    return guarded([&] {
        require(mesh && out, "null argument to dh_solve");
        require(num_electrodes == 0 || electrodes, "electrodes pointer is null");
        *out = nullptr;
        const SolverOptions opts = to_options(options);
        const Formulation f = formulation_of(options);
        ConductionProblem p;
        p.mesh = &mesh->mesh;
        p.conductivity = cell_materials(mesh->mesh, materials, num_materials);
        std::vector<std::pair<int, double>> tags;
        for (std::size_t i = 0; i < num_electrodes; ++i)
            tags.emplace_back(electrodes[i].tag, electrodes[i].voltage);
        p.electrodes = electrodes_from_tags(mesh->mesh, tags);
        auto* s = new dh_solution;
        try {
            s->result = f == Formulation::SP ? solve_sp(p, opts) : solve_dsp(p, opts);
        } catch (...) {
            delete s;
            throw;
        }
        *out = s;
    });
}

void dh_solution_destroy(dh_solution* solution)
{
    delete solution;
}

dh_status dh_solution_get_summary(const dh_solution* solution, dh_solution_summary* out)
{
    return guarded([&] {
        require(solution && out, "null argument to dh_solution_get_summary");
        const SolveResult& r = solution->result;
        out->applied_voltage = r.applied_voltage;
        out->current = r.current;
        out->power = r.power;
        out->conductance = r.conductance;
        out->conductance_power = r.conductance_power;
        out->relative_residual = r.relative_residual;
        out->conservation_residual = r.conservation_residual;
        out->circuital_residual = r.circuital_residual;
        out->iterations = r.iterations;
    });
}

dh_status dh_solution_get_potentials(const dh_solution* solution, double* out, size_t capacity,
                                     size_t* count)
{
    return guarded([&] {
        require(solution != nullptr, "null solution");
        const auto& u = solution->result.potentials;
        if (count)
            *count = u.size();
        if (!out)
            return;
        require(capacity >= u.size(), "output buffer too small for the potentials");
        std::copy(u.begin(), u.end(), out);
    });
}

dh_status dh_solution_get_cell_fields(const dh_solution* solution, double* E, double* J,
                                      size_t num_cells)
{
    return guarded([&] {
        require(solution && E && J, "null argument to dh_solution_get_cell_fields");
        const auto& r = solution->result;
        require(num_cells == r.cell_E.size(), "cell count does not match the solution");
        for (std::size_t c = 0; c < num_cells; ++c)
            for (int a = 0; a < 3; ++a) {
                E[3 * c + a] = r.cell_E[c][a];
                J[3 * c + a] = r.cell_J[c][a];
            }
    });
}

dh_status dh_solution_write_fields(const dh_solution* solution, const char* path)
{
    return guarded([&] {
        require(solution && path, "null argument to dh_solution_write_fields");
        std::ofstream out(path);
        if (!out)
            throw Error(ErrorCode::Io, std::string("cannot open '") + path + "' for writing");
        const auto& r = solution->result;
        char buf[256];
        for (std::size_t c = 0; c < r.cell_E.size(); ++c) {
            const Vec3& E = r.cell_E[c];
            const Vec3& J = r.cell_J[c];
            std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g %.17g %.17g %.17g\n", c, E.x(),
                          E.y(), E.z(), J.x(), J.y(), J.z());
            out << buf;
        }
        if (!out)
            throw Error(ErrorCode::Io, std::string("failed writing '") + path + "'");
    });
}

dh_status dh_export_matrix(const dh_mesh* mesh, const dh_material* materials, size_t num_materials,
                           const char* material_mode, const char* which, const char* path,
                           int64_t* nnz)
{
    return guarded([&] {
        require(mesh && which && path, "null argument to dh_export_matrix");
        const std::string w = which;
        require(w == "me" || w == "mf" || w == "met" || w == "mft",
                "matrix must be one of me, mf, met, mft");
        const MaterialMode mode =
            material_mode ? parse_material_mode(material_mode) : MaterialMode::Piecewise;
        const auto K = cell_materials(mesh->mesh, materials, num_materials);
        const GlobalOperators ops = assemble_global_operators(mesh->mesh, K, mode);
        const SparseMatrix& m = w == "me" ? ops.ME : w == "mf" ? ops.MF : w == "met" ? ops.MEt : ops.MFt;
        write_coordinate(m, std::string(path));
        if (nnz)
            *nnz = m.nnz();
    });
}

dh_status dh_patch_test(const dh_benchmark_spec* spec, const dh_solve_options* options,
                        double threshold, dh_patch_report* out)
{
    return guarded([&] {
        require(out != nullptr, "null output for dh_patch_test");
        require(threshold > 0, "threshold must be positive");
        const BenchmarkSpec s = to_spec(spec);
        const SolverOptions opts = to_options(options);
        const PatchReport r =
            run_patch_test(s, formulation_of(options), opts.material_mode, opts, threshold);
        out->cells = r.cells;
        out->conductance = r.conductance;
        out->conductance_power = r.conductance_power;
        out->expected_conductance = r.expected_conductance;
        out->potential_deviation = r.potential_deviation;
        out->field_deviation = r.field_deviation;
        out->tangential_E_jump = r.tangential_E_jump;
        out->normal_J_jump = r.normal_J_jump;
        out->conservation_residual = r.conservation_residual;
        out->circuital_residual = r.circuital_residual;
        out->iterations = r.iterations;
        out->passed = r.passed ? 1 : 0;
    });
}

dh_status dh_square_resistor_study(const int* levels, size_t num_levels, const char* formulations,
                                   const dh_solve_options* options, int timing, char** csv,
                                   int* sp_upper_bound, int* dsp_error_decreasing)
{
    return guarded([&] {
        require(levels && num_levels > 0 && formulations && csv,
                "levels, formulations and output are required");
        *csv = nullptr;
        std::vector<int> lv(levels, levels + num_levels);
        for (int l : lv) {
            BenchmarkSpec s;
            s.geometry = BenchmarkGeometry::SquareResistorEighth;
            s.level = l;
            s.validate();
        }
        std::vector<Formulation> fs;
        std::stringstream list(formulations);
        for (std::string item; std::getline(list, item, ',');) {
            const Formulation f = parse_formulation(item);
            if (std::find(fs.begin(), fs.end(), f) == fs.end())
                fs.push_back(f);
        }
        require(!fs.empty(), "no formulation given");
        const auto rows = run_square_resistor(lv, fs, to_options(options));
        std::ostringstream out;
        write_report_csv(rows, out, timing != 0);
        const ResistorChecks checks = check_resistor_rows(rows);
        if (sp_upper_bound)
            *sp_upper_bound = checks.sp_upper_bound;
        if (dsp_error_decreasing)
            *dsp_error_decreasing = checks.dsp_error_decreasing;
        *csv = copy_string(out.str());
    });
}

} // extern "C"
