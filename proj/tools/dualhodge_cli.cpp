// Command-line front end; talks to the library through the C interface only.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dualhodge.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;

/// Thrown for library failures; carries the message of the last C call.
struct CallFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(dh_status s, const char* what)
{
    if (s != DH_OK)
        throw CallFailed(std::string(what) + ": " + dh_status_string(s) + ": " + dh_last_error());
}

struct MeshDeleter {
    void operator()(dh_mesh* m) const { dh_mesh_destroy(m); }
};
using MeshPtr = std::unique_ptr<dh_mesh, MeshDeleter>;

struct StringDeleter {
    void operator()(char* s) const { dh_string_free(s); }
};
using CString = std::unique_ptr<char, StringDeleter>;

/// Writes text to --out when given, otherwise to stdout.
void emit(const std::string& out_path, const std::string& text)
{
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path);
    if (!f || !(f << text))
        throw CallFailed("cannot write '" + out_path + "'");
}

/// Mesh source shared by the commands: a file or a built-in generator.
struct MeshSource {
    std::string path;
    std::string format;
    std::string gen; // geometry[:level[:jitter]]
    int level = 1;
    double jitter = 0.0;
    std::uint64_t seed = 0;
    double sigma1 = 1.0;
    double sigma2 = 2.0;

    void add_options(CLI::App* cmd, bool with_file)
    {
        CLI::Option* mesh_opt = nullptr;
        if (with_file) {
            mesh_opt = cmd->add_option("--mesh", path, "Mesh file (simple format or Gmsh MSH 2.2)")
                           ->check(CLI::ExistingFile);
            cmd->add_option("--format", format, "simple or msh2 (default: from the extension)");
        }
        auto* gen_opt = cmd->add_option(
            "--gen", gen,
            "Built-in mesh GEOMETRY[:LEVEL[:JITTER]] with GEOMETRY one of unit_box, "
            "series_box, parallel_box, square_resistor_eighth");
        if (mesh_opt)
            mesh_opt->excludes(gen_opt);
        cmd->add_option("--level", level, "Refinement level of the generated mesh")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--jitter", jitter, "Interior node jitter as a fraction of the mesh size")
            ->check(CLI::Range(0.0, 0.24));
        cmd->add_option("--seed", seed, "Seed of the jitter");
        cmd->add_option("--sigma1", sigma1, "Conductivity of material tag 1 (S/m)");
        cmd->add_option("--sigma2", sigma2, "Conductivity of material tag 2 (S/m)");
    }

    dh_benchmark_spec spec(std::string& geometry_storage) const
    {
        dh_benchmark_spec s;
        dh_benchmark_spec_init(&s);
        std::stringstream parts(gen);
        std::string token;
        std::getline(parts, geometry_storage, ':');
        s.level = level;
        s.jitter = jitter;
        try {
            if (std::getline(parts, token, ':'))
                s.level = std::stoi(token);
            if (std::getline(parts, token, ':'))
                s.jitter = std::stod(token);
        } catch (const std::exception&) {
            throw CallFailed("malformed --gen '" + gen + "', expected GEOMETRY[:LEVEL[:JITTER]]");
        }
        s.geometry = geometry_storage.c_str();
        s.seed = seed;
        s.sigma1 = sigma1;
        s.sigma2 = sigma2;
        return s;
    }

    MeshPtr load() const
    {
        dh_mesh* m = nullptr;
        if (!path.empty()) {
            std::string fmt = format;
            if (fmt.empty())
                fmt = path.size() > 4 && path.substr(path.size() - 4) == ".msh" ? "msh2" : "simple";
            check(dh_mesh_load(path.c_str(), fmt.c_str(), &m), "loading mesh");
        } else {
            if (gen.empty())
                throw CallFailed("give a mesh with --mesh PATH or --gen GEOMETRY[:LEVEL]");
            std::string geometry;
            const dh_benchmark_spec s = spec(geometry);
            check(dh_mesh_generate(&s, &m), "generating mesh");
        }
        return MeshPtr(m);
    }

    std::vector<dh_material> materials() const
    {
        auto iso = [](int tag, double s) {
            dh_material m{tag, {s, 0, 0, 0, s, 0, 0, 0, s}};
            return m;
        };
        if (!path.empty())
            return {};
        return {iso(1, sigma1), iso(2, sigma2)};
    }
};

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int cmd_check_identities(const MeshSource& src, double tol, const std::string& out)
{
    if (!(tol > 0))
        throw CallFailed("--tol must be positive");
    const MeshPtr mesh = src.load();
    char* raw = nullptr;
    double worst = 0.0;
    check(dh_check_identities(mesh.get(), &raw, &worst), "checking identities");
    const CString csv(raw);
    emit(out, csv.get());
    if (worst < tol)
        return kExitOk;
    std::istringstream lines(csv.get());
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        std::istringstream cols(line);
        std::string name, value;
        std::getline(cols, name, ',');
        std::getline(cols, value, ',');
        if (std::stod(value) >= tol)
            std::cerr << "identity " << name << " fails: residual " << value << " >= " << tol << '\n';
    }
    return kExitCheckFailed;
}

int cmd_patch_test(MeshSource src, const std::string& variant, const std::string& formulation,
                   const std::string& mode, double tol, double threshold, const std::string& out)
{
    if (variant != "uniform" && variant != "series" && variant != "parallel")
        throw CallFailed("--variant must be uniform, series or parallel");
    src.gen = variant;
    std::string geometry;
    const dh_benchmark_spec spec = src.spec(geometry);
    dh_solve_options opts;
    dh_solve_options_init(&opts);
    opts.formulation = formulation.c_str();
    opts.material_mode = mode.c_str();
    opts.tol = tol;
    dh_patch_report r{};
    check(dh_patch_test(&spec, &opts, threshold, &r), "patch test");

    std::ostringstream csv;
    csv << "variant,formulation,material_mode,level,jitter,seed,cells,G,G_expected,"
           "potential_deviation,field_deviation,tangential_E_jump,normal_J_jump,iterations,result\n";
    csv << variant << ',' << formulation << ',' << mode << ',' << spec.level << ','
        << fmt("%g", spec.jitter) << ',' << spec.seed << ',' << r.cells << ','
        << fmt("%.12g", r.conductance) << ',' << fmt("%.12g", r.expected_conductance) << ','
        << fmt("%.3e", r.potential_deviation) << ',' << fmt("%.3e", r.field_deviation) << ','
        << fmt("%.3e", r.tangential_E_jump) << ',' << fmt("%.3e", r.normal_J_jump) << ','
        << r.iterations << ',' << (r.passed ? "pass" : "fail") << '\n';
    emit(out, csv.str());
    return r.passed ? kExitOk : kExitCheckFailed;
}

std::vector<int> parse_levels(const std::string& text)
{
    std::vector<int> levels;
    try {
        if (text.find(',') == std::string::npos) {
            const int n = std::stoi(text);
            for (int l = 1; l <= n; ++l)
                levels.push_back(l);
        } else {
            std::stringstream parts(text);
            for (std::string t; std::getline(parts, t, ',');)
                levels.push_back(std::stoi(t));
        }
    } catch (const std::exception&) {
        throw CallFailed("malformed --levels '" + text + "'");
    }
    if (levels.empty())
        throw CallFailed("--levels selects no level");
    return levels;
}

int cmd_resistor(const std::string& levels_text, const std::string& formulations,
                 const std::string& mode, double tol, bool timing, const std::string& out)
{
    const std::vector<int> levels = parse_levels(levels_text);
    dh_solve_options opts;
    dh_solve_options_init(&opts);
    opts.material_mode = mode.c_str();
    opts.tol = tol;
    char* raw = nullptr;
    int upper = 0, decreasing = 0;
    check(dh_square_resistor_study(levels.data(), levels.size(), formulations.c_str(), &opts,
                                   timing ? 1 : 0, &raw, &upper, &decreasing),
          "square resistor study");
    const CString csv(raw);
    emit(out, csv.get());
    int rc = kExitOk;
    if (!upper) {
        std::cerr << "check failed: an SP conductance lies below the reference 10.23409256 S\n";
        rc = kExitCheckFailed;
    }
    if (!decreasing) {
        std::cerr << "check failed: the DSP relative error does not decrease with refinement\n";
        rc = kExitCheckFailed;
    }
    return rc;
}

int cmd_export_matrix(const MeshSource& src, const std::string& which, const std::string& mode,
                      const std::string& out)
{
    const MeshPtr mesh = src.load();
    const auto mats = src.materials();
    int64_t nnz = 0;
    check(dh_export_matrix(mesh.get(), mats.data(), mats.size(), mode.c_str(), which.c_str(),
                           out.c_str(), &nnz),
          "exporting matrix");
    std::cerr << "wrote " << which << " (" << nnz << " nonzeros) to " << out << '\n';
    return kExitOk;
}

int cmd_generate(const MeshSource& src, const std::string& out)
{
    const MeshPtr mesh = src.load();
    check(dh_mesh_write_simple(mesh.get(), out.c_str()), "writing mesh");
    dh_mesh_info info{};
    check(dh_mesh_get_info(mesh.get(), &info), "mesh info");
    std::cerr << "wrote " << info.nodes << " nodes, " << info.cells << " cells to " << out << '\n';
    return kExitOk;
}

/// Parses TAG=VALUE.
std::pair<int, double> tag_value(const std::string& text, const char* option)
{
    const auto eq = text.find('=');
    try {
        if (eq != std::string::npos)
            return {std::stoi(text.substr(0, eq)), std::stod(text.substr(eq + 1))};
    } catch (const std::exception&) {
    }
    throw CallFailed(std::string("malformed ") + option + " '" + text + "', expected TAG=VALUE");
}

int cmd_solve(const MeshSource& src, const std::vector<std::string>& electrode_args,
              const std::vector<std::string>& sigma_args, const std::string& formulation,
              const std::string& mode, double tol, const std::string& fields, const std::string& out)
{
    std::vector<dh_electrode> electrodes;
    for (const auto& e : electrode_args) {
        const auto [tag, v] = tag_value(e, "--electrode");
        electrodes.push_back({tag, v});
    }
    if (electrodes.empty())
        electrodes = {{1, 0.0}, {2, 1.0}};
    std::vector<dh_material> mats = src.materials();
    if (!sigma_args.empty()) {
        mats.clear();
        for (const auto& s : sigma_args) {
            const auto [tag, v] = tag_value(s, "--sigma");
            mats.push_back({tag, {v, 0, 0, 0, v, 0, 0, 0, v}});
        }
    }
    const MeshPtr mesh = src.load();
    dh_solve_options opts;
    dh_solve_options_init(&opts);
    opts.formulation = formulation.c_str();
    opts.material_mode = mode.c_str();
    opts.tol = tol;
    dh_solution* raw = nullptr;
    check(dh_solve(mesh.get(), mats.data(), mats.size(), electrodes.data(), electrodes.size(), &opts,
                   &raw),
          "solving");
    const std::unique_ptr<dh_solution, void (*)(dh_solution*)> sol(raw, dh_solution_destroy);
    dh_solution_summary s{};
    check(dh_solution_get_summary(sol.get(), &s), "summary");
    if (!fields.empty())
        check(dh_solution_write_fields(sol.get(), fields.c_str()), "writing fields");
    std::ostringstream csv;
    csv << "formulation,material_mode,voltage,current,power,G,G_power,iterations,"
           "relative_residual,conservation_residual,circuital_residual\n"
        << formulation << ',' << mode << ',' << fmt("%.12g", s.applied_voltage) << ','
        << fmt("%.12g", s.current) << ',' << fmt("%.12g", s.power) << ','
        << fmt("%.12g", s.conductance) << ',' << fmt("%.12g", s.conductance_power) << ','
        << s.iterations << ',' << fmt("%.3e", s.relative_residual) << ','
        << fmt("%.3e", s.conservation_residual) << ',' << fmt("%.3e", s.circuital_residual) << '\n';
    emit(out, csv.str());
    return kExitOk;
}

const char* kResistorHelp =
    "Square resistor convergence study (h = 1 m, d = 4 m, l = 2 m, sigma = 1 S/m).\n"
    "Only one eighth is meshed: the quarter x >= 0, y >= 0 of the square annulus,\n"
    "cut at half height. The planes x = 0, y = 0 and z = 0 are symmetry planes on\n"
    "which J.n = 0, so they are insulated. The full resistor is 8 such pieces\n"
    "connected in parallel between the two electrodes, hence G = 8 G_eighth and\n"
    "P = 8 P_eighth. The reference conductance is 10.23409256 S. SP bounds it from\n"
    "above and DSP from below; the command exits with 2 when an SP row falls below\n"
    "the reference or the DSP error fails to decrease from level to level.";

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse inverse mass matrices on barycentric dual grids and DC conduction solvers"};
    app.require_subcommand(1);

    MeshSource ident_src;
    double ident_tol = 1e-10;
    std::string ident_out;
    auto* ident = app.add_subcommand("check-identities",
                                     "Worst residual of every geometric identity (CSV); exit 0 iff all "
                                     "lie below --tol");
    ident_src.add_options(ident, true);
    ident->add_option("--tol", ident_tol, "Relative residual threshold");
    ident->add_option("--out", ident_out, "Write the CSV here instead of stdout");

    MeshSource patch_src;
    patch_src.level = 4;
    patch_src.jitter = 0.1;
    patch_src.seed = 1;
    std::string variant = "uniform", patch_form = "dsp", patch_mode = "hybrid", patch_out;
    double patch_tol = 1e-12, patch_threshold = 1e-9;
    auto* patch = app.add_subcommand(
        "patch-test", "Analytic box solutions; exit 0 on pass, 2 on fail (threshold on potential, "
                      "conductance and interface jumps)");
    patch->add_option("--variant", variant, "uniform, series or parallel");
    patch->add_option("--formulation", patch_form, "sp or dsp");
    patch->add_option("--material-mode", patch_mode, "hybrid (piecewise) or weighted");
    patch->add_option("--level", patch_src.level, "Refinement level")->check(CLI::PositiveNumber);
    patch->add_option("--jitter", patch_src.jitter, "Interior node jitter (fraction of h)")
        ->check(CLI::Range(0.0, 0.24));
    patch->add_option("--seed", patch_src.seed, "Seed of the jitter");
    patch->add_option("--sigma1", patch_src.sigma1, "Conductivity of region 1 (S/m)");
    patch->add_option("--sigma2", patch_src.sigma2, "Conductivity of region 2 (S/m)");
    patch->add_option("--tol", patch_tol, "Relative CG tolerance");
    patch->add_option("--threshold", patch_threshold, "Pass threshold");
    patch->add_option("--out", patch_out, "Write the CSV here instead of stdout");

    std::string levels = "4", formulations = "sp,dsp", res_mode = "hybrid", res_out;
    double res_tol = 1e-10;
    bool timing = false;
    std::uint64_t res_seed = 0;
    auto* res = app.add_subcommand("resistor", kResistorHelp);
    res->add_option("--levels", levels, "N for levels 1..N, or a comma list");
    res->add_option("--formulations", formulations, "Comma list of sp, dsp");
    res->add_option("--material-mode", res_mode, "hybrid (piecewise) or weighted");
    res->add_option("--tol", res_tol, "Relative CG tolerance");
    res->add_flag("--timing", timing, "Append a wall_s column (not byte-stable)");
    res->add_option("--seed", res_seed, "Accepted for uniformity; the study is deterministic");
    res->add_option("--out", res_out, "Write the CSV here instead of stdout");

    MeshSource exp_src;
    std::string which, exp_mode = "hybrid", exp_out;
    auto* exp = app.add_subcommand(
        "export-matrix", "Write a global operator in 1-based coordinate format (row col value)");
    exp_src.add_options(exp, true);
    exp->add_option("--which", which, "me, mf, met or mft")
        ->required()
        ->check(CLI::IsMember({"me", "mf", "met", "mft"}));
    exp->add_option("--material-mode", exp_mode, "hybrid (piecewise) or weighted");
    exp->add_option("--out", exp_out, "Output path")->required();

    MeshSource gen_src;
    std::string gen_out;
    auto* gen = app.add_subcommand("generate", "Write a built-in mesh in the simple format");
    gen_src.add_options(gen, false);
    gen->add_option("--out", gen_out, "Output path")->required();

    MeshSource solve_src;
    std::vector<std::string> electrode_args, sigma_args;
    std::string solve_form = "dsp", solve_mode = "hybrid", fields, solve_out;
    double solve_tol = 1e-10;
    auto* solve = app.add_subcommand("solve", "Solve a conduction problem on a mesh");
    solve_src.add_options(solve, true);
    solve->add_option("--electrode", electrode_args,
                      "TAG=VOLTAGE per electrode, the first being the 0 V reference "
                      "(default 1=0 2=1)");
    solve->add_option("--sigma", sigma_args, "TAG=CONDUCTIVITY per material (default 1 S/m)");
    solve->add_option("--formulation", solve_form, "sp or dsp");
    solve->add_option("--material-mode", solve_mode, "hybrid (piecewise) or weighted");
    solve->add_option("--tol", solve_tol, "Relative CG tolerance");
    solve->add_option("--fields", fields, "Write per-cell E and J here");
    solve->add_option("--out", solve_out, "Write the CSV summary here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitError;
    }

    try {
        if (*ident)
            return cmd_check_identities(ident_src, ident_tol, ident_out);
        if (*patch)
            return cmd_patch_test(patch_src, variant, patch_form, patch_mode, patch_tol,
                                  patch_threshold, patch_out);
        if (*res)
            return cmd_resistor(levels, formulations, res_mode, res_tol, timing, res_out);
        if (*exp)
            return cmd_export_matrix(exp_src, which, exp_mode, exp_out);
        if (*gen)
            return cmd_generate(gen_src, gen_out);
        if (*solve)
            return cmd_solve(solve_src, electrode_args, sigma_args, solve_form, solve_mode,
                             solve_tol, fields, solve_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
