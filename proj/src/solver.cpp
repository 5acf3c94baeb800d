#include "dualhodge/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

namespace dualhodge {

namespace {

constexpr int kInterior = -2;
constexpr int kInsulated = -1;

/// Role of every face: kInterior, kInsulated or the electrode index.
std::vector<int> face_roles(const ConductionProblem& p)
{
    const TetMesh& mesh = *p.mesh;
    std::vector<int> role(mesh.num_faces(), kInterior);
    for (Index f : mesh.boundary_faces())
        role[f] = kInsulated;
    for (std::size_t k = 0; k < p.electrodes.size(); ++k)
        for (Index f : p.electrodes[k].faces)
            role[f] = static_cast<int>(k);
    return role;
}

double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

int default_max_iter(const SolverOptions& o, std::size_t n)
{
    if (o.max_iter > 0)
        return o.max_iter;
    return static_cast<int>(std::min<std::size_t>(20 * std::max<std::size_t>(n, 1),
                                                  std::numeric_limits<int>::max()));
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a)
{
    Eigen::MatrixXd s = a + a.transpose();
    s *= 0.5;
    return s;
}

/// Condensed dual-edge inverse of one dual cell: the insulated faces (B)
/// carry no current, so their dual-edge voltages are eliminated locally.
struct NodeBlock {
    std::vector<Index> faces;        ///< faces A (not insulated)
    Eigen::MatrixXd S;               ///< Schur complement on A
    std::vector<Index> hidden_faces; ///< faces B (insulated)
    Eigen::MatrixXd X;               ///< maps A voltages to B voltages
};

NodeBlock condense(const LocalMatrix& M, std::span<const int> role)
{
    NodeBlock blk;
    std::vector<Eigen::Index> a, b;
    for (std::size_t j = 0; j < M.entities.size(); ++j) {
        if (role[M.entities[j]] == kInsulated) {
            b.push_back(static_cast<Eigen::Index>(j));
            blk.hidden_faces.push_back(M.entities[j]);
        } else {
            a.push_back(static_cast<Eigen::Index>(j));
            blk.faces.push_back(M.entities[j]);
        }
    }
    const Eigen::MatrixXd Maa = M.values(a, a);
    if (b.empty()) {
        blk.S = Maa;
        return blk;
    }
    const Eigen::MatrixXd Mbb = M.values(b, b);
    const Eigen::MatrixXd Mba = M.values(b, a);
    Eigen::LLT<Eigen::MatrixXd> llt(Mbb);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotPositiveDefinite, "local inverse mass matrix is not positive definite");
    blk.X = -llt.solve(Mba);
    blk.S = symmetrized(Maa + Mba.transpose() * blk.X);
    return blk;
}

} // namespace

void ConductionProblem::validate() const
{
    if (mesh == nullptr)
        throw Error(ErrorCode::InvalidArgument, "problem has no mesh");
    if (static_cast<Index>(conductivity.size()) != mesh->num_cells())
        throw Error(ErrorCode::InvalidArgument, "one conductivity tensor per cell is required (got " +
                                                    std::to_string(conductivity.size()) + " for " +
                                                    std::to_string(mesh->num_cells()) + " cells)");
    for (const auto& k : conductivity)
        k.validate();
    if (electrodes.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "at least two electrodes are required");
    if (electrodes[0].voltage != 0.0)
        throw Error(ErrorCode::InvalidArgument, "electrode 0 is the 0 V reference");
    std::vector<int> owner(mesh->num_faces(), -1);
    for (std::size_t k = 0; k < electrodes.size(); ++k) {
        if (!std::isfinite(electrodes[k].voltage))
            throw Error(ErrorCode::InvalidArgument, "electrode voltage must be finite");
        if (electrodes[k].faces.empty())
            throw Error(ErrorCode::InvalidArgument, "electrode " + std::to_string(k) + " has no faces");
        for (Index f : electrodes[k].faces) {
            if (f < 0 || f >= mesh->num_faces())
                throw Error(ErrorCode::InvalidArgument, "electrode face index out of range");
            if (!mesh->is_boundary_face(f))
                throw Error(ErrorCode::InvalidArgument,
                            "electrode face " + std::to_string(f) + " is not on the boundary");
            if (owner[f] >= 0)
                throw Error(ErrorCode::InvalidArgument,
                            "face " + std::to_string(f) + " belongs to electrodes " +
                                std::to_string(owner[f]) + " and " + std::to_string(k));
            owner[f] = static_cast<int>(k);
        }
    }
}

std::vector<Electrode> electrodes_from_tags(const TetMesh& mesh,
                                            std::span<const std::pair<int, double>> tags)
{
    std::vector<Electrode> out;
    for (const auto& [tag, voltage] : tags) {
        Electrode e;
        e.voltage = voltage;
        for (Index f : mesh.boundary_faces())
            if (mesh.face_tag(f) == tag)
                e.faces.push_back(f);
        if (e.faces.empty())
            throw Error(ErrorCode::InvalidArgument,
                        "no boundary face carries electrode tag " + std::to_string(tag));
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::uint8_t> closed_dual_faces(const ConductionProblem& problem)
{
    const TetMesh& mesh = *problem.mesh;
    const auto role = face_roles(problem);
    std::vector<std::uint8_t> closed(mesh.num_edges(), 1);
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        int electrode = -1;
        for (Index f : mesh.edge_faces(e)) {
            const int r = role[f];
            if (r == kInsulated || (r >= 0 && electrode >= 0 && r != electrode)) {
                closed[e] = 0;
                break;
            }
            if (r >= 0)
                electrode = r;
        }
    }
    return closed;
}

std::vector<double> build_source_voltages(const ConductionProblem& problem)
{
    problem.validate();
    const TetMesh& mesh = *problem.mesh;
    std::vector<double> es(mesh.num_faces(), 0.0);
    double vmax = 0.0;
    for (const auto& el : problem.electrodes) {
        vmax = std::max(vmax, std::abs(el.voltage));
        for (Index f : el.faces)
            es[f] = cell_face_incidence(mesh, mesh.face_cells(f)[0], f) * el.voltage;
    }
    const auto closed = closed_dual_faces(problem);
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        if (!closed[e])
            continue;
        double circ = 0.0;
        for (Index f : mesh.edge_faces(e))
            circ += face_edge_sign(mesh.face(f), mesh.edge(e)) * es[f];
        if (std::abs(circ) > 1e-12 * vmax)
            throw Error(ErrorCode::InvalidArgument,
                        "source voltages circulate around the dual face of edge " + std::to_string(e));
    }
    return es;
}

double dissipated_power(const SparseMatrix& M, std::span<const double> v)
{
    const auto mv = matvec(M, v);
    return std::inner_product(v.begin(), v.end(), mv.begin(), 0.0);
}

SolveResult solve_dsp(const ConductionProblem& problem, const SolverOptions& options)
{
    const std::vector<double> es = build_source_voltages(problem);
    const TetMesh& mesh = *problem.mesh;
    const auto role = face_roles(problem);
    const GeometricVectors g = geometric_vectors(mesh);
    const DualGeometry dual = build_dual_geometry(mesh, g);

    std::vector<MaterialTensor> rho;
    rho.reserve(problem.conductivity.size());
    for (const auto& s : problem.conductivity)
        rho.push_back(s.inverse());

    SolveResult res;
    res.formulation = Formulation::DSP;
    res.constructions = hybrid_material_strategy(mesh, rho, options.material_mode);

    auto sys = SparseAssembler::from_cliques(mesh.num_cells(), [&](auto&& emit) {
        for (Index n = 0; n < mesh.num_nodes(); ++n)
            emit(mesh.node_cells(n));
    });
    std::vector<double> b(mesh.num_cells(), 0.0);
    std::vector<NodeBlock> blocks(mesh.num_nodes());
    // Local cell-face incidence of a dual cell, rows over C(n), columns over its A faces.
    auto local_incidence = [&](Index n, const NodeBlock& blk) {
        const auto cells = mesh.node_cells(n);
        Eigen::MatrixXd Dn = Eigen::MatrixXd::Zero(cells.size(), blk.faces.size());
        for (std::size_t j = 0; j < blk.faces.size(); ++j) {
            const Index f = blk.faces[j];
            for (Index c : mesh.face_cells(f)) {
                if (c < 0)
                    continue;
                const auto row = std::lower_bound(cells.begin(), cells.end(), c) - cells.begin();
                Dn(row, static_cast<Eigen::Index>(j)) = cell_face_incidence(mesh, c, f);
            }
        }
        return Dn;
    };

    for (Index n = 0; n < mesh.num_nodes(); ++n) {
        const LocalMatrix M =
            dual_edge_inverse(mesh, g, dual, rho, n, res.constructions[n], options.stab);
        NodeBlock& blk = blocks[n] = condense(M, role);
        const Eigen::MatrixXd Dn = local_incidence(n, blk);
        const Eigen::MatrixXd DS = Dn * blk.S;
        sys.add(mesh.node_cells(n), symmetrized(DS * Dn.transpose()));
        Eigen::VectorXd esa(blk.faces.size());
        for (std::size_t j = 0; j < blk.faces.size(); ++j)
            esa[static_cast<Eigen::Index>(j)] = es[blk.faces[j]];
        const Eigen::VectorXd rhs = DS * esa;
        const auto cells = mesh.node_cells(n);
        for (std::size_t r = 0; r < cells.size(); ++r)
            b[cells[r]] += rhs[static_cast<Eigen::Index>(r)];
    }
    const SparseMatrix A = std::move(sys).finish();

    const double u = problem.electrodes[1].voltage;
    std::vector<double> x(mesh.num_cells(), 0.0);
    std::vector<double> voltages(mesh.num_faces(), 0.0), currents(mesh.num_faces(), 0.0);
    const int max_iter = default_max_iter(options, x.size());

    auto post_process = [&] {
        std::fill(currents.begin(), currents.end(), 0.0);
        for (Index f = 0; f < mesh.num_faces(); ++f) {
            if (role[f] == kInsulated)
                continue;
            double v = -es[f];
            for (Index c : mesh.face_cells(f))
                if (c >= 0)
                    v += cell_face_incidence(mesh, c, f) * x[c];
            voltages[f] = v;
        }
        for (Index n = 0; n < mesh.num_nodes(); ++n) {
            const NodeBlock& blk = blocks[n];
            Eigen::VectorXd ea(blk.faces.size());
            for (std::size_t j = 0; j < blk.faces.size(); ++j)
                ea[static_cast<Eigen::Index>(j)] = voltages[blk.faces[j]];
            const Eigen::VectorXd ja = blk.S * ea;
            for (std::size_t j = 0; j < blk.faces.size(); ++j)
                currents[blk.faces[j]] += ja[static_cast<Eigen::Index>(j)];
        }
        double power = 0.0, injected = 0.0;
        for (Index f = 0; f < mesh.num_faces(); ++f)
            power += voltages[f] * currents[f];
        for (Index f : problem.electrodes[1].faces)
            injected -= cell_face_incidence(mesh, mesh.face_cells(f)[0], f) * currents[f];
        double div = 0.0;
        for (Index c = 0; c < mesh.num_cells(); ++c) {
            double s = 0.0;
            for (int i = 0; i < 4; ++i)
                s += mesh.cell_face_sign(c, i) * currents[mesh.cell_faces(c)[i]];
            div = std::max(div, std::abs(s));
        }
        res.power = power;
        res.current = injected;
        const double jmax = max_abs(currents);
        res.conservation_residual = jmax > 0 ? div / jmax : 0.0;
    };

    // Tighten the solve until discrete conservation and the energy balance
    // both hold at the requested tolerance, or the attainable accuracy is hit.
    double t = options.tol;
    while (true) {
        const CgResult cg = conjugate_gradient(A, b, x, t, max_iter);
        res.iterations += cg.iterations;
        res.relative_residual = cg.relative_residual;
        post_process();
        const bool conserved = res.conservation_residual <= options.tol;
        const bool balanced = u == 0.0 || std::abs(res.current * u - res.power) <=
                                              options.tol * std::abs(res.current * u);
        if ((conserved && balanced) || cg.relative_residual > t || t < 1e-15)
            break;
        t *= 0.1;
    }

    // Dual-edge voltages on insulated faces: mean of the condensed values of
    // the face's three dual cells.
    std::vector<int> hidden_count(mesh.num_faces(), 0);
    for (Index n = 0; n < mesh.num_nodes(); ++n) {
        const NodeBlock& blk = blocks[n];
        if (blk.hidden_faces.empty())
            continue;
        Eigen::VectorXd ea(blk.faces.size());
        for (std::size_t j = 0; j < blk.faces.size(); ++j)
            ea[static_cast<Eigen::Index>(j)] = voltages[blk.faces[j]];
        const Eigen::VectorXd eb = blk.X * ea;
        for (std::size_t j = 0; j < blk.hidden_faces.size(); ++j) {
            voltages[blk.hidden_faces[j]] += eb[static_cast<Eigen::Index>(j)];
            ++hidden_count[blk.hidden_faces[j]];
        }
    }
    for (Index f = 0; f < mesh.num_faces(); ++f)
        if (hidden_count[f] > 0)
            voltages[f] /= hidden_count[f];

    const auto closed = closed_dual_faces(problem);
    double circ = 0.0;
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        if (!closed[e])
            continue;
        double s = 0.0;
        for (Index f : mesh.edge_faces(e))
            s += face_edge_sign(mesh.face(f), mesh.edge(e)) * voltages[f];
        circ = std::max(circ, std::abs(s));
    }
    const double emax = max_abs(voltages);
    res.circuital_residual = emax > 0 ? circ / emax : 0.0;

    res.applied_voltage = u;
    if (u != 0.0) {
        res.conductance = res.current / u;
        res.conductance_power = res.power / (u * u);
    }
    res.potentials = std::move(x);
    res.voltages = std::move(voltages);
    res.currents = std::move(currents);
    reconstruct_cell_fields(res, mesh, dual, problem.conductivity);
    return res;
}

SolveResult solve_sp(const ConductionProblem& problem, const SolverOptions& options)
{
    problem.validate();
    const TetMesh& mesh = *problem.mesh;
    const GeometricVectors g = geometric_vectors(mesh);
    const DualGeometry dual = build_dual_geometry(mesh, g);

    constexpr double kFree = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> fixed(mesh.num_nodes(), kFree);
    std::vector<std::uint8_t> on_electrode1(mesh.num_nodes(), 0);
    for (std::size_t k = 0; k < problem.electrodes.size(); ++k) {
        const auto& el = problem.electrodes[k];
        for (Index f : el.faces)
            for (Index n : mesh.face(f)) {
                if (!std::isnan(fixed[n]) && fixed[n] != el.voltage)
                    throw Error(ErrorCode::InvalidArgument,
                                "node " + std::to_string(n) +
                                    " touches electrodes at different voltages");
                fixed[n] = el.voltage;
                if (k == 1)
                    on_electrode1[n] = 1;
            }
    }

    // Local stiffness Gcᵀ Mc Gc per cell, and Mc kept for the currents.
    std::vector<Eigen::Matrix<double, 6, 6>> cell_mass(mesh.num_cells());
    auto stiff = SparseAssembler::from_cliques(mesh.num_nodes(), [&](auto&& emit) {
        for (Index c = 0; c < mesh.num_cells(); ++c)
            emit(std::span<const Index>(mesh.cell(c)));
    });
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const LocalMatrix M =
            local_mass_edge(mesh, g, dual.cells[c], c, problem.conductivity[c], options.stab);
        cell_mass[c] = M.values;
        Eigen::Matrix<double, 6, 4> Gc = Eigen::Matrix<double, 6, 4>::Zero();
        for (int k = 0; k < 6; ++k) {
            const int s = mesh.cell_edge_sign(c, k);
            Gc(k, kLocalEdges[k][0]) = -s;
            Gc(k, kLocalEdges[k][1]) = s;
        }
        const Eigen::Matrix4d Kc = Gc.transpose() * cell_mass[c] * Gc;
        stiff.add(mesh.cell(c), symmetrized(Kc));
    }
    const SparseMatrix K = std::move(stiff).finish();

    std::vector<Index> free_id(mesh.num_nodes(), -1);
    std::vector<Index> free_nodes;
    for (Index n = 0; n < mesh.num_nodes(); ++n)
        if (std::isnan(fixed[n])) {
            free_id[n] = static_cast<Index>(free_nodes.size());
            free_nodes.push_back(n);
        }
    SparseMatrix A;
    A.rows = A.cols = static_cast<Index>(free_nodes.size());
    A.row_offsets.assign(free_nodes.size() + 1, 0);
    std::vector<double> b(free_nodes.size(), 0.0);
    for (std::size_t i = 0; i < free_nodes.size(); ++i) {
        const Index n = free_nodes[i];
        const auto cols = K.row_cols(n);
        const auto vals = K.row_values(n);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (free_id[cols[k]] >= 0) {
                A.col_indices.push_back(free_id[cols[k]]);
                A.values.push_back(vals[k]);
            } else {
                b[i] -= vals[k] * fixed[cols[k]];
            }
        }
        A.row_offsets[i + 1] = static_cast<std::int64_t>(A.values.size());
    }

    const double u = problem.electrodes[1].voltage;
    std::vector<double> y(free_nodes.size(), 0.0);
    std::vector<double> U(mesh.num_nodes(), 0.0);
    const int max_iter = default_max_iter(options, y.size());
    SolveResult res;
    res.formulation = Formulation::SP;
    std::vector<double> KU;
    double t = options.tol;
    while (true) {
        const CgResult cg = conjugate_gradient(A, b, y, t, max_iter);
        res.iterations += cg.iterations;
        res.relative_residual = cg.relative_residual;
        for (Index n = 0; n < mesh.num_nodes(); ++n)
            U[n] = free_id[n] >= 0 ? y[free_id[n]] : fixed[n];
        KU = matvec(K, U);
        double injected = 0.0;
        for (Index n = 0; n < mesh.num_nodes(); ++n)
            if (on_electrode1[n])
                injected += KU[n];
        res.current = injected;
        res.power = std::inner_product(U.begin(), U.end(), KU.begin(), 0.0);
        const bool balanced = u == 0.0 || std::abs(res.current * u - res.power) <=
                                              options.tol * std::abs(res.current * u);
        if (balanced || cg.relative_residual > t || t < 1e-15)
            break;
        t *= 0.1;
    }

    // Edge voltages E = −G U and dual-face currents J = M^E E, cell by cell.
    std::vector<double> voltages(mesh.num_edges()), currents(mesh.num_edges(), 0.0);
    for (Index e = 0; e < mesh.num_edges(); ++e)
        voltages[e] = U[mesh.edge(e)[0]] - U[mesh.edge(e)[1]];
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        Eigen::Matrix<double, 6, 1> ec;
        for (int k = 0; k < 6; ++k)
            ec[k] = voltages[mesh.cell_edges(c)[k]];
        const Eigen::Matrix<double, 6, 1> jc = cell_mass[c] * ec;
        for (int k = 0; k < 6; ++k)
            currents[mesh.cell_edges(c)[k]] += jc[k];
    }

    res.applied_voltage = u;
    if (u != 0.0) {
        res.conductance = res.current / u;
        res.conductance_power = res.power / (u * u);
    }
    res.potentials = std::move(U);
    res.voltages = std::move(voltages);
    res.currents = std::move(currents);
    reconstruct_cell_fields(res, mesh, dual, problem.conductivity);
    return res;
}

void reconstruct_cell_fields(SolveResult& result, const TetMesh& mesh, const DualGeometry& dual,
                             std::span<const MaterialTensor> conductivity)
{
    result.cell_E.assign(mesh.num_cells(), Vec3::Zero());
    result.cell_J.assign(mesh.num_cells(), Vec3::Zero());
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const CellDualVectors& dv = dual.cells[c];
        if (result.formulation == Formulation::DSP) {
            Vec3 J = Vec3::Zero();
            for (int i = 0; i < 4; ++i)
                J += result.currents[mesh.cell_faces(c)[i]] * dv.dual_edges[i];
            J /= dv.volume;
            result.cell_J[c] = J;
            result.cell_E[c] = conductivity[c].K.llt().solve(J);
        } else {
            Vec3 E = Vec3::Zero();
            for (int k = 0; k < 6; ++k)
                E += result.voltages[mesh.cell_edges(c)[k]] * dv.dual_faces[k];
            E /= dv.volume;
            result.cell_E[c] = E;
            result.cell_J[c] = conductivity[c].K * E;
        }
    }
}

} // namespace dualhodge
