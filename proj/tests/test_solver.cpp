#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <gtest/gtest.h>

#include "dualhodge/benchmark.hpp"
#include "dualhodge/solver.hpp"
#include "oracles.hpp"

using namespace dualhodge;

namespace {

BenchmarkSpec spec_of(BenchmarkGeometry geometry, int level, double jitter, std::uint64_t seed)
{
    BenchmarkSpec s;
    s.geometry = geometry;
    s.level = level;
    s.jitter = jitter;
    s.seed = seed;
    return s;
}

SolverOptions tight(MaterialMode mode = MaterialMode::Piecewise)
{
    SolverOptions o;
    o.tol = 1e-12;
    o.material_mode = mode;
    return o;
}

int incidence(const TetMesh& mesh, Index c, Index f)
{
    for (int i = 0; i < 4; ++i)
        if (mesh.cell_faces(c)[i] == f)
            return mesh.cell_face_sign(c, i);
    return 0;
}

/// Dense cell-potential solve where insulated faces of each dual cell are either
/// condensed out (zero current, free voltage) or dropped from the local matrix.
Eigen::VectorXd dense_cell_potentials(const ConductionProblem& p, bool condense)
{
    const TetMesh& mesh = *p.mesh;
    const GeometricVectors g = geometric_vectors(mesh);
    const DualGeometry dual = build_dual_geometry(mesh, g);
    std::vector<MaterialTensor> rho;
    for (const auto& s : p.conductivity)
        rho.push_back(s.inverse());
    const auto how = hybrid_material_strategy(mesh, rho, MaterialMode::Piecewise);
    const std::vector<double> es = build_source_voltages(p);
    std::vector<std::uint8_t> insulated(mesh.num_faces(), 0);
    for (Index f : mesh.boundary_faces())
        insulated[f] = 1;
    for (const auto& el : p.electrodes)
        for (Index f : el.faces)
            insulated[f] = 0;

    const Index nc = mesh.num_cells();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nc, nc);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nc);
    for (Index n = 0; n < mesh.num_nodes(); ++n) {
        const LocalMatrix M = dual_edge_inverse(mesh, g, dual, rho, n, how[n]);
        std::vector<Eigen::Index> a, i;
        for (std::size_t j = 0; j < M.entities.size(); ++j)
            (insulated[M.entities[j]] ? i : a).push_back(static_cast<Eigen::Index>(j));
        Eigen::MatrixXd S = M.values(a, a);
        if (condense && !i.empty())
            S -= M.values(a, i) * M.values(i, i).ldlt().solve(M.values(i, a));
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nc, static_cast<Eigen::Index>(a.size()));
        Eigen::VectorXd e(static_cast<Eigen::Index>(a.size()));
        for (std::size_t j = 0; j < a.size(); ++j) {
            const Index f = M.entities[a[j]];
            e[j] = es[f];
            for (Index c : mesh.face_cells(f))
                if (c >= 0)
                    D(c, j) = incidence(mesh, c, f);
        }
        A += D * S * D.transpose();
        b += D * S * e;
    }
    return A.ldlt().solve(b);
}

} // namespace

TEST(Cg, SolvesSmallSpdSystems)
{
    TripletBuilder<double> tb(50, 50);
    for (Index k = 0; k < 50; ++k) {
        tb.add(k, k, 2.0);
        if (k > 0) {
            tb.add(k, k - 1, -1.0);
            tb.add(k - 1, k, -1.0);
        }
    }
    const SparseMatrix A = tb.build();
    std::vector<double> b(50, 1.0), x(50, 0.0);
    const CgResult r = conjugate_gradient(A, b, x, 1e-12, 200);
    EXPECT_LE(r.relative_residual, 1e-12);
    EXPECT_LE(r.iterations, 50);
    // Exact solution of the discrete 1-D Laplacian with unit load.
    for (int k = 0; k < 50; ++k)
        EXPECT_NEAR(x[k], 0.5 * (k + 1) * (50 - k), 1e-8);
    std::vector<double> y(50, 0.0);
    EXPECT_THROW(conjugate_gradient(A, b, y, 1e-14, 3), Error);
    try {
        conjugate_gradient(A, b, y, 1e-14, 3);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotConverged);
    }
    std::vector<double> zero(50, 0.0);
    EXPECT_EQ(conjugate_gradient(A, zero, y, 1e-12, 10).iterations, 0);
}

TEST(Cg, DetectsIndefiniteMatrices)
{
    TripletBuilder<double> tb(2, 2);
    tb.add(0, 0, 1.0);
    tb.add(1, 1, 1.0);
    tb.add(0, 1, 2.0);
    tb.add(1, 0, 2.0);
    std::vector<double> b{1.0, -1.0}, x(2, 0.0);
    try {
        conjugate_gradient(tb.build(), b, x, 1e-12, 10);
        FAIL() << "indefinite matrix accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    }
    TripletBuilder<double> neg(1, 1);
    neg.add(0, 0, -1.0);
    std::vector<double> b1{1.0}, x1{0.0};
    EXPECT_THROW(conjugate_gradient(neg.build(), b1, x1, 1e-12, 10), Error);
}

TEST(Solver, ProblemValidation)
{
    const BenchmarkSpec s = spec_of(BenchmarkGeometry::UnitBox, 2, 0.0, 0);
    const TetMesh mesh = generate_mesh(s);
    const ConductionProblem good = benchmark_problem(s, mesh);
    EXPECT_NO_THROW(good.validate());

    auto expect_invalid = [](const ConductionProblem& p) {
        try {
            p.validate();
            ADD_FAILURE() << "accepted an invalid problem";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidArgument) << e.what();
        }
    };
    ConductionProblem p = good;
    p.mesh = nullptr;
    expect_invalid(p);
    p = good;
    p.conductivity.pop_back();
    expect_invalid(p);
    p = good;
    p.electrodes.pop_back();
    expect_invalid(p);
    p = good;
    p.electrodes[0].voltage = 0.5;
    expect_invalid(p);
    p = good;
    p.electrodes[1].voltage = std::nan("");
    expect_invalid(p);
    p = good;
    p.electrodes[1].faces.clear();
    expect_invalid(p);
    p = good;
    p.electrodes[1].faces.push_back(p.electrodes[0].faces.front());
    expect_invalid(p);
    p = good;
    for (Index f = 0; f < mesh.num_faces(); ++f)
        if (!mesh.is_boundary_face(f)) {
            p.electrodes[1].faces.push_back(f);
            break;
        }
    expect_invalid(p);
    p = good;
    p.electrodes[1].faces.push_back(mesh.num_faces());
    expect_invalid(p);
    p = good;
    p.conductivity[3] = MaterialTensor::isotropic(-1.0);
    try {
        p.validate();
        ADD_FAILURE() << "accepted a negative conductivity";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    }

    const std::pair<int, double> missing[] = {{7, 0.0}};
    EXPECT_THROW(electrodes_from_tags(mesh, missing), Error);
}

// Nodal potentials cannot take two values at a shared node; cell potentials
// only lose the closed dual face around the shared edge.
TEST(Solver, ElectrodesMeetingAtDifferentVoltages)
{
    const TetMesh mesh = TetMesh::build({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)},
                                        {{0, 1, 2, 3}});
    ConductionProblem p;
    p.mesh = &mesh;
    p.conductivity.assign(1, MaterialTensor::isotropic(1.0));
    p.electrodes = {{{mesh.boundary_faces()[0]}, 0.0}, {{mesh.boundary_faces()[1]}, 1.0}};
    EXPECT_THROW(solve_sp(p), Error);
    const SolveResult r = solve_dsp(p, tight());
    EXPECT_GT(r.conductance, 0.0);
    EXPECT_NEAR(r.conductance, r.conductance_power, 1e-10);
    const auto closed = closed_dual_faces(p);
    EXPECT_EQ(std::count(closed.begin(), closed.end(), 1), 0);
}

TEST(Solver, PatchTestsPassInBothFormulations)
{
    for (auto geometry : {BenchmarkGeometry::UnitBox, BenchmarkGeometry::SeriesBox,
                          BenchmarkGeometry::ParallelBox})
        for (auto formulation : {Formulation::SP, Formulation::DSP}) {
            const auto r = run_patch_test(spec_of(geometry, 4, 0.1, 5), formulation,
                                          MaterialMode::Piecewise, tight());
            EXPECT_TRUE(r.passed) << to_string(geometry) << " " << to_string(formulation);
            EXPECT_LT(r.potential_deviation, 1e-9);
            EXPECT_LT(r.field_deviation, 1e-8);
            EXPECT_NEAR(r.conductance, r.expected_conductance, 1e-9);
            EXPECT_NEAR(r.conductance_power, r.expected_conductance, 1e-9);
        }
}

TEST(Solver, AnisotropicHomogeneousPatch)
{
    const BenchmarkSpec s = spec_of(BenchmarkGeometry::UnitBox, 3, 0.15, 4);
    const TetMesh mesh = generate_mesh(s);
    ConductionProblem p = benchmark_problem(s, mesh);
    MaterialTensor k;
    k.K = Vec3(2.0, 3.0, 5.0).asDiagonal();
    p.conductivity.assign(mesh.num_cells(), k);
    for (const SolveResult& r : {solve_sp(p, tight()), solve_dsp(p, tight())}) {
        EXPECT_NEAR(r.conductance, 2.0, 1e-9);
        for (Index c = 0; c < mesh.num_cells(); ++c) {
            EXPECT_LT((r.cell_E[c] - Vec3(-1, 0, 0)).norm(), 1e-8);
            EXPECT_LT((r.cell_J[c] - Vec3(-2, 0, 0)).norm(), 1e-8);
        }
    }
}

TEST(Solver, DspMatchesDenseOracleAndKeepsInvariants)
{
    for (auto geometry : {BenchmarkGeometry::SeriesBox, BenchmarkGeometry::SquareResistorEighth}) {
        const BenchmarkSpec s = spec_of(geometry, 1, 0.0, 0);
        const TetMesh mesh = generate_mesh(s);
        const ConductionProblem p = benchmark_problem(s, mesh);
        const SolveResult r = solve_dsp(p, tight());
        const Eigen::VectorXd u = oracle::dense_dsp_potentials(p);
        for (Index c = 0; c < mesh.num_cells(); ++c)
            EXPECT_NEAR(r.potentials[c], u[c], 1e-10);
        const auto inv = oracle::dsp_invariants(p, r);
        EXPECT_LT(inv.conservation, 1e-9);
        EXPECT_LT(inv.circuital, 1e-12);
        EXPECT_NEAR(inv.conservation, r.conservation_residual, 1e-12);
        EXPECT_NEAR(r.conductance, r.conductance_power, 1e-9 * r.conductance);
    }
}

TEST(Solver, InsulatedFacesMustBeCondensedNotDropped)
{
    const BenchmarkSpec s = spec_of(BenchmarkGeometry::UnitBox, 3, 0.15, 9);
    const TetMesh mesh = generate_mesh(s);
    const ConductionProblem p = benchmark_problem(s, mesh);
    const SolveResult r = solve_dsp(p, tight());
    const GeometricVectors g = geometric_vectors(mesh);
    const Eigen::VectorXd condensed = dense_cell_potentials(p, true);
    const Eigen::VectorXd dropped = dense_cell_potentials(p, false);
    double dev_condensed = 0.0, dev_dropped = 0.0;
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const double exact = analytic_potential(s, g.cell_barycenters[c]);
        EXPECT_NEAR(condensed[c], r.potentials[c], 1e-10);
        dev_condensed = std::max(dev_condensed, std::abs(condensed[c] - exact));
        dev_dropped = std::max(dev_dropped, std::abs(dropped[c] - exact));
    }
    EXPECT_LT(dev_condensed, 1e-9);
    EXPECT_GT(dev_dropped, 1e-4);
}

TEST(Solver, ResistorBoundsFromBothSides)
{
    const BenchmarkSpec s = spec_of(BenchmarkGeometry::SquareResistorEighth, 1, 0.0, 0);
    const TetMesh mesh = generate_mesh(s);
    const ConductionProblem p = benchmark_problem(s, mesh);
    const double ref = kSquareResistorConductance / kSquareResistorSymmetryFactor;
    const SolveResult sp = solve_sp(p, tight());
    const SolveResult dsp = solve_dsp(p, tight());
    EXPECT_GT(sp.conductance, ref);
    EXPECT_LT(dsp.conductance, ref);
    EXPECT_NEAR(sp.conductance, sp.conductance_power, 1e-9 * ref);
}

// Averaging the material over a dual cell that straddles an interface breaks
// the cell-potential patch test; the values below pin that behaviour.
TEST(Solver, WeightedAverageFailsAtInterfacesForCellPotentials)
{
    const auto series = run_patch_test(spec_of(BenchmarkGeometry::SeriesBox, 4, 0.1, 7), Formulation::DSP,
                                       MaterialMode::Weighted, tight());
    EXPECT_FALSE(series.passed);
    EXPECT_NEAR(series.conductance, 1.33473, 5e-6);
    const auto parallel = run_patch_test(spec_of(BenchmarkGeometry::ParallelBox, 4, 0.1, 7),
                                         Formulation::DSP, MaterialMode::Weighted, tight());
    EXPECT_FALSE(parallel.passed);
    EXPECT_NEAR(parallel.conductance, 1.45951, 5e-6);
    // Nodal potentials use per-cell matrices only, so the mode does not matter.
    const auto sp = run_patch_test(spec_of(BenchmarkGeometry::SeriesBox, 4, 0.1, 7), Formulation::SP,
                                   MaterialMode::Weighted, tight());
    EXPECT_TRUE(sp.passed);
}

TEST(Solver, IterationLimitIsReported)
{
    const BenchmarkSpec s = spec_of(BenchmarkGeometry::UnitBox, 3, 0.1, 1);
    const TetMesh mesh = generate_mesh(s);
    const ConductionProblem p = benchmark_problem(s, mesh);
    SolverOptions o = tight();
    o.max_iter = 2;
    try {
        solve_dsp(p, o);
        FAIL() << "expected the iteration limit to trigger";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotConverged);
    }
}
