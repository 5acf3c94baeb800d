// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "dualhodge/assembly.hpp"
#include "dualhodge/benchmark.hpp"
#include "dualhodge/dualgeom.hpp"
#include "oracles.hpp"

using namespace dualhodge;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

/// Generated meshes covered by the identity criteria.
std::vector<BenchmarkSpec> generated_specs()
{
    std::vector<BenchmarkSpec> specs;
    auto add = [&](BenchmarkGeometry g, int level, double jitter, std::uint64_t seed) {
        BenchmarkSpec s;
        s.geometry = g;
        s.level = level;
        s.jitter = jitter;
        s.seed = seed;
        specs.push_back(s);
    };
    for (int l = 1; l <= 4; ++l)
        add(BenchmarkGeometry::UnitBox, l, 0.0, 0);
    add(BenchmarkGeometry::UnitBox, 4, 0.1, 11);
    add(BenchmarkGeometry::UnitBox, 8, 0.1, 12);
    for (int l : {2, 4}) {
        add(BenchmarkGeometry::SeriesBox, l, 0.0, 0);
        add(BenchmarkGeometry::SeriesBox, l, 0.1, 13);
        add(BenchmarkGeometry::ParallelBox, l, 0.0, 0);
        add(BenchmarkGeometry::ParallelBox, l, 0.1, 14);
    }
    add(BenchmarkGeometry::SquareResistorEighth, 1, 0.0, 0);
    add(BenchmarkGeometry::SquareResistorEighth, 2, 0.0, 0);
    add(BenchmarkGeometry::SquareResistorEighth, 2, 0.1, 15);
    return specs;
}

Outcome criterion1()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    double worst = 0.0;
    std::string where;
    for (int i = 0; i < 1000; ++i) {
        const TetMesh mesh = oracle::random_tet_mesh(rng);
        for (const auto& r : check_identities(mesh))
            if (r.worst > worst) {
                worst = r.worst;
                where = r.name + " on random tet " + std::to_string(i);
            }
    }
    double worst_mesh = 0.0;
    const auto specs = generated_specs();
    for (const auto& s : specs)
        for (const auto& r : check_identities(generate_mesh(s)))
            if (r.worst > worst_mesh) {
                worst_mesh = r.worst;
                if (r.worst > worst)
                    where = r.name + " on " + to_string(s.geometry) + " level " +
                            std::to_string(s.level);
            }
    const double t = seconds_since(t0);
    const double w = std::max(worst, worst_mesh);
    return {w < 1e-10 && t < 10.0,
            fmt("worst residual %.2e on 1000 random tets, %.2e on %zu generated meshes (%s), "
                "%.2f s",
                worst, worst_mesh, specs.size(), where.c_str(), t)};
}

Outcome criterion2()
{
    std::mt19937_64 rng(77);
    oracle::BarycentricReport worst;
    for (int i = 0; i < 200; ++i)
        worst.merge(oracle::barycentric_facts(oracle::random_tet_mesh(rng)));
    for (const auto& s : generated_specs())
        worst.merge(oracle::barycentric_facts(generate_mesh(s)));
    const double m = std::max({worst.corner_volume, worst.half_edge, worst.third_face, worst.total_volume});
    return {m < 1e-13, fmt("corner volume %.1e, edge half %.1e, face third %.1e, total dual volume "
                           "%.1e (relative)",
                           worst.corner_volume, worst.half_edge, worst.third_face, worst.total_volume)};
}

Outcome criterion3()
{
    std::mt19937_64 rng(31337);
    oracle::LocalReport worst;
    int cholesky_failures = 0, asymmetric = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = oracle::local_matrix_trial(rng, trial);
        worst.merge(r);
        cholesky_failures += r.cholesky_failures;
        asymmetric += r.asymmetric;
    }
    return {cholesky_failures == 0 && asymmetric == 0 && worst.consistency < 1e-12 &&
                worst.annihilation < 1e-13,
            fmt("400 matrices: %d asymmetric, %d failed Cholesky, consistency %.1e, "
                "annihilation %.1e",
                asymmetric, cholesky_failures, worst.consistency, worst.annihilation)};
}

Outcome criterion4()
{
    double worst_op = 0.0, worst_solve = 0.0;
    int meshes = 0;
    for (auto [geometry, level, jitter] :
         {std::tuple{BenchmarkGeometry::UnitBox, 2, 0.15}, std::tuple{BenchmarkGeometry::SeriesBox, 2, 0.15},
          std::tuple{BenchmarkGeometry::ParallelBox, 2, 0.0}, std::tuple{BenchmarkGeometry::UnitBox, 3, 0.1}}) {
        BenchmarkSpec s;
        s.geometry = geometry;
        s.level = level;
        s.jitter = jitter;
        s.seed = 5 + meshes;
        const TetMesh mesh = generate_mesh(s);
        if (mesh.num_cells() > 200)
            continue;
        ++meshes;
        const ConductionProblem p = benchmark_problem(s, mesh);
        std::vector<MaterialTensor> resistivity;
        for (const auto& k : p.conductivity)
            resistivity.push_back(k.inverse());
        for (const auto& K : {p.conductivity, resistivity}) {
            const GlobalOperators ops = assemble_global_operators(mesh, K);
            const auto dense = oracle::dense_global_operators(mesh, K);
            worst_op = std::max({worst_op, oracle::max_entry_difference(ops.ME, dense.ME),
                                 oracle::max_entry_difference(ops.MF, dense.MF),
                                 oracle::max_entry_difference(ops.MFt, dense.MFt),
                                 oracle::max_entry_difference(ops.MEt, dense.MEt)});
        }
        SolverOptions opts;
        opts.tol = 1e-12;
        const SolveResult cg = solve_dsp(p, opts);
        const Eigen::VectorXd u = oracle::dense_dsp_potentials(p);
        for (Index c = 0; c < mesh.num_cells(); ++c)
            worst_solve = std::max(worst_solve, std::abs(u[c] - cg.potentials[c]));
    }
    return {worst_op <= 1e-14 && worst_solve < 1e-9,
            fmt("%d meshes: max operator difference %.1e (relative to the largest entry), "
                "dense vs CG potentials %.1e",
                meshes, worst_op, worst_solve)};
}

Outcome criterion5()
{
    const std::vector<int> levels{8, 16, 24};
    std::vector<double> met, mft;
    bool local = true;
    for (int l : levels) {
        BenchmarkSpec s;
        s.level = l;
        const TetMesh mesh = generate_mesh(s);
        const std::vector<MaterialTensor> K(mesh.num_cells(), MaterialTensor::isotropic(1.0));
        const GlobalOperators ops = assemble_global_operators(mesh, K);
        met.push_back(static_cast<double>(ops.MEt.nnz()) / mesh.num_faces());
        mft.push_back(static_cast<double>(ops.MFt.nnz()) / mesh.num_edges());
        local = local && oracle::entries_share_a_node(mesh, ops.MEt, true) &&
                oracle::entries_share_a_node(mesh, ops.MFt, false);
    }
    auto change = [](const std::vector<double>& r) {
        return std::abs(r[r.size() - 1] - r[r.size() - 2]) / r[r.size() - 2];
    };
    const double ce = change(met), cf = change(mft);
    return {ce < 0.10 && cf < 0.10 && local,
            fmt("unit box levels 8/16/24: nnz per dual edge %.2f/%.2f/%.2f (change %.1f%%), per "
                "dual face %.2f/%.2f/%.2f (change %.1f%%); every entry couples entities of one "
                "dual cell: %s",
                met[0], met[1], met[2], 100 * ce, mft[0], mft[1], mft[2], 100 * cf,
                local ? "yes" : "no")};
}

Outcome criterion6()
{
    SolverOptions opts;
    opts.tol = 1e-12;
    double dev = 0.0, gerr = 0.0, slowest = 0.0;
    for (Formulation f : {Formulation::SP, Formulation::DSP})
        for (std::uint64_t seed : {1, 2}) {
            BenchmarkSpec s;
            s.level = 8;
            s.jitter = 0.1;
            s.seed = seed;
            const auto t0 = Clock::now();
            const PatchReport r = run_patch_test(s, f, MaterialMode::Piecewise, opts);
            slowest = std::max(slowest, seconds_since(t0));
            dev = std::max(dev, r.potential_deviation);
            gerr = std::max({gerr, std::abs(r.conductance - 1.0), std::abs(r.conductance_power - 1.0)});
        }
    return {dev < 1e-9 && gerr < 1e-9 && slowest < 5.0,
            fmt("jittered unit box level 8, SP and DSP: potential deviation %.1e, |G - 1| %.1e, "
                "slowest run %.2f s",
                dev, gerr, slowest)};
}

Outcome criterion7()
{
    SolverOptions opts;
    opts.tol = 1e-12;
    double gs = 0.0, gp = 0.0, jump = 0.0;
    for (int level : {4, 8})
        for (Formulation f : {Formulation::SP, Formulation::DSP})
            for (BenchmarkGeometry g : {BenchmarkGeometry::SeriesBox, BenchmarkGeometry::ParallelBox}) {
                BenchmarkSpec s;
                s.geometry = g;
                s.level = level;
                s.jitter = 0.1;
                s.seed = 3;
                const PatchReport r = run_patch_test(s, f, MaterialMode::Piecewise, opts);
                const double expected = g == BenchmarkGeometry::SeriesBox ? 4.0 / 3.0 : 1.5;
                double& e = g == BenchmarkGeometry::SeriesBox ? gs : gp;
                e = std::max({e, std::abs(r.conductance - expected),
                              std::abs(r.conductance_power - expected)});
                jump = std::max({jump, r.tangential_E_jump, r.normal_J_jump});
            }
    return {gs < 1e-9 && gp < 1e-9 && jump < 1e-9,
            fmt("levels 4 and 8, jittered, SP and DSP: |G - 4/3| %.1e, |G - 3/2| %.1e, largest "
                "interface jump %.1e",
                gs, gp, jump)};
}

Outcome criterion8()
{
    const auto t0 = Clock::now();
    const auto rows = run_square_resistor({1, 2, 3, 4}, {Formulation::SP, Formulation::DSP}, SolverOptions{});
    const double t = seconds_since(t0);
    const ResistorChecks checks = check_resistor_rows(rows);
    std::string dsp, sp;
    double finest = 1.0;
    Index cells = 0;
    for (const auto& r : rows) {
        std::string& s = r.formulation == Formulation::DSP ? dsp : sp;
        s += fmt("%s%.6f", s.empty() ? "" : " ", r.conductance);
        if (r.formulation == Formulation::DSP) {
            finest = r.relative_error;
            cells = r.cells;
        }
    }
    return {checks.dsp_error_decreasing && checks.sp_upper_bound && finest < 0.02 && t < 60.0,
            fmt("G_DSP %s, G_SP %s; DSP error %.2f%% at %d cells, decreasing: %s, SP >= "
                "10.23409256: %s, %.1f s",
                dsp.c_str(), sp.c_str(), 100 * finest, static_cast<int>(cells),
                checks.dsp_error_decreasing ? "yes" : "no", checks.sp_upper_bound ? "yes" : "no", t)};
}

Outcome criterion9()
{
    const SolverOptions opts; // default tolerance
    double cons = 0.0, circ = 0.0, gap = 0.0;
    int solves = 0;
    std::vector<BenchmarkSpec> specs;
    for (BenchmarkGeometry g : {BenchmarkGeometry::UnitBox, BenchmarkGeometry::SeriesBox,
                                BenchmarkGeometry::ParallelBox, BenchmarkGeometry::SquareResistorEighth}) {
        BenchmarkSpec s;
        s.geometry = g;
        s.level = g == BenchmarkGeometry::SquareResistorEighth ? 2 : 6;
        s.jitter = 0.1;
        s.seed = 9;
        specs.push_back(s);
    }
    for (const auto& s : specs) {
        const TetMesh mesh = generate_mesh(s);
        const ConductionProblem p = benchmark_problem(s, mesh);
        const SolveResult r = solve_dsp(p, opts);
        const auto inv = oracle::dsp_invariants(p, r);
        cons = std::max(cons, inv.conservation / opts.tol);
        circ = std::max(circ, inv.circuital);
        gap = std::max(gap, std::abs(r.conductance - r.conductance_power) /
                                std::abs(r.conductance) / opts.tol);
        ++solves;
    }
    return {cons <= 10.0 && circ <= 1e-12 && gap <= 10.0,
            fmt("%d DSP solves at tol 1e-10: ||DJ||/||J|| = %.2f tol, ||C^T E||/||E|| = %.1e, "
                "|G_i - G_P|/G = %.2f tol",
                solves, cons, circ, gap)};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"geometric identities", criterion1},  {"barycentric facts", criterion2},
        {"local matrix properties", criterion3}, {"dense oracle equivalence", criterion4},
        {"sparsity", criterion5},              {"uniform patch test", criterion6},
        {"multi-material patch tests", criterion7}, {"square resistor", criterion8},
        {"conservation and circuital invariants", criterion9}};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    return failed == 0 ? 0 : 1;
}
