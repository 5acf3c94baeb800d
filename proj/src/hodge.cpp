#include "dualhodge/hodge.hpp"

#include <algorithm>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace dualhodge {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a)
{
    Eigen::MatrixXd s = a + a.transpose();
    s *= 0.5;
    return s;
}

template <typename Vectors>
RowVectors rows_of(const Vectors& v)
{
    RowVectors r(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i)
        r.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    return r;
}

LocalMatrix to_local(MassTerms terms, std::span<const Index> entities)
{
    return {terms.total(), std::vector<Index>(entities.begin(), entities.end())};
}

} // namespace

MaterialTensor MaterialTensor::inverse() const
{
    return {spd_inverse(K)};
}

void MaterialTensor::validate() const
{
    if (!K.allFinite())
        throw Error(ErrorCode::InvalidArgument, "material tensor has non-finite entries");
    if (K != K.transpose())
        throw Error(ErrorCode::InvalidArgument, "material tensor is not symmetric");
    Eigen::LLT<Mat3> llt(K);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotPositiveDefinite, "material tensor is not positive definite");
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a)
{
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
    return symmetrized(llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
}

Eigen::MatrixXd complement_basis(const RowVectors& range)
{
    const auto m = range.rows();
    if (m < 3)
        throw Error(ErrorCode::InvalidArgument, "complement_basis: fewer than 3 rows");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(range);
    qr.setThreshold(1e-12);
    if (qr.rank() < 3)
        throw Error(ErrorCode::DegenerateCell, "geometric vectors do not span space (rank " +
                                                   std::to_string(qr.rank()) + ")");
    Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(m - 3);
}

Eigen::MatrixXd MassTerms::total() const
{
    return consistent + stabilization;
}

MassTerms mass_terms(const RowVectors& image, const RowVectors& range, const Mat3& K,
                     double volume, const StabilizationParams& stab)
{
    const auto m = image.rows();
    if (range.rows() != m)
        throw Error(ErrorCode::InvalidArgument, "mass_terms: image and range sizes differ");
    if (!(volume > 0))
        throw Error(ErrorCode::DegenerateCell, "mass_terms: nonpositive volume");
    MassTerms t;
    t.consistent = symmetrized(image * K * image.transpose() / volume);

    const Eigen::MatrixXd W = complement_basis(range);
    Eigen::VectorXd alpha(m - 3);
    if (stab.weights.empty()) {
        const double a = stab.scale * t.consistent.trace() / static_cast<double>(m);
        if (!(a > 0))
            throw Error(ErrorCode::InvalidArgument, "stabilization weight must be positive");
        alpha.setConstant(a);
    } else {
        if (static_cast<Eigen::Index>(stab.weights.size()) != m - 3)
            throw Error(ErrorCode::InvalidArgument,
                        "expected " + std::to_string(m - 3) + " stabilization weights");
        for (Eigen::Index i = 0; i < m - 3; ++i) {
            if (!(stab.weights[i] > 0))
                throw Error(ErrorCode::InvalidArgument, "stabilization weight must be positive");
            alpha[i] = stab.weights[i];
        }
    }
    t.stabilization = symmetrized(W * alpha.asDiagonal() * W.transpose());
    return t;
}

MassTerms local_mass_face_terms(const TetMesh& mesh, const GeometricVectors& g,
                                const CellDualVectors& dv, Index cell, const MaterialTensor& K,
                                const StabilizationParams& stab)
{
    RowVectors image(4, 3), range(4, 3);
    for (int i = 0; i < 4; ++i) {
        image.row(i) = dv.dual_edges[i].transpose();
        range.row(i) = g.face_vectors[mesh.cell_faces(cell)[i]].transpose();
    }
    return mass_terms(image, range, K.K, dv.volume, stab);
}

LocalMatrix local_mass_face(const TetMesh& mesh, const GeometricVectors& g,
                            const CellDualVectors& dv, Index cell, const MaterialTensor& K,
                            const StabilizationParams& stab)
{
    return to_local(local_mass_face_terms(mesh, g, dv, cell, K, stab), mesh.cell_faces(cell));
}

MassTerms local_mass_edge_terms(const TetMesh& mesh, const GeometricVectors& g,
                                const CellDualVectors& dv, Index cell, const MaterialTensor& K,
                                const StabilizationParams& stab)
{
    RowVectors image(6, 3), range(6, 3);
    for (int k = 0; k < 6; ++k) {
        image.row(k) = dv.dual_faces[k].transpose();
        range.row(k) = g.edge_vectors[mesh.cell_edges(cell)[k]].transpose();
    }
    return mass_terms(image, range, K.K, dv.volume, stab);
}

LocalMatrix local_mass_edge(const TetMesh& mesh, const GeometricVectors& g,
                            const CellDualVectors& dv, Index cell, const MaterialTensor& K,
                            const StabilizationParams& stab)
{
    return to_local(local_mass_edge_terms(mesh, g, dv, cell, K, stab), mesh.cell_edges(cell));
}

MassTerms local_inverse_mass_dual_face_terms(const DualCellGeometry& dc, const MaterialTensor& Kt,
                                             const StabilizationParams& stab)
{
    return mass_terms(rows_of(dc.half_edges), rows_of(dc.dual_faces), Kt.K, dc.volume, stab);
}

LocalMatrix local_inverse_mass_dual_face(const DualCellGeometry& dc, const MaterialTensor& Kt,
                                         const StabilizationParams& stab)
{
    return to_local(local_inverse_mass_dual_face_terms(dc, Kt, stab), dc.edges);
}

MassTerms local_inverse_mass_dual_edge_terms(const DualCellGeometry& dc, const MaterialTensor& Kt,
                                             const StabilizationParams& stab)
{
    return mass_terms(rows_of(dc.third_faces), rows_of(dc.dual_edges), Kt.K, dc.volume, stab);
}

LocalMatrix local_inverse_mass_dual_edge(const DualCellGeometry& dc, const MaterialTensor& Kt,
                                         const StabilizationParams& stab)
{
    return to_local(local_inverse_mass_dual_edge_terms(dc, Kt, stab), dc.faces);
}

MaterialTensor weighted_average_material(const TetMesh& mesh, const DualGeometry& dual,
                                         std::span<const MaterialTensor> K, Index node)
{
    Mat3 mean = Mat3::Zero();
    for (Index c : mesh.node_cells(node))
        mean += dual.cells[c].corner_volume() * K[c].K;
    mean /= dual.dual_volumes[node];
    mean = 0.5 * (mean + mean.transpose()).eval();
    Eigen::LLT<Mat3> llt(mean);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::NotPositiveDefinite,
                    "averaged material at node " + std::to_string(node) + " is singular");
    return MaterialTensor{mean}.inverse();
}

PiecewiseSums piecewise_sums(const TetMesh& mesh, const GeometricVectors& g,
                             const DualGeometry& dual, std::span<const MaterialTensor> K,
                             Index node)
{
    const auto edges = mesh.node_edges(node);
    const auto faces = mesh.node_faces(node);
    PiecewiseSums s;
    s.edge_to_dual_face = Eigen::MatrixXd::Zero(edges.size(), edges.size());
    s.face_to_dual_edge = Eigen::MatrixXd::Zero(faces.size(), faces.size());
    for (Index c : mesh.node_cells(node)) {
        const auto& cn = mesh.cell(c);
        const int a = static_cast<int>(std::find(cn.begin(), cn.end(), node) - cn.begin());
        const CornerPairing p = corner_pairing(mesh, g, c, a);
        const double vol = dual.cells[c].corner_volume();
        Eigen::Matrix3d R_face, R_edge;
        std::array<Eigen::Index, 3> epos{}, fpos{};
        for (int j = 0; j < 3; ++j) {
            Index e = mesh.cell_edges(c)[p.local_edges[j]];
            Index f = mesh.cell_faces(c)[p.local_faces[j]];
            epos[j] = std::lower_bound(edges.begin(), edges.end(), e) - edges.begin();
            fpos[j] = std::lower_bound(faces.begin(), faces.end(), f) - faces.begin();
            // f̃_e|c + s_{n,e}|c and ẽ_f|c + l_{n,f}|c in their closed forms.
            R_face.row(j) = (p.signs[j] / 6.0) * g.face_vectors[f].transpose();
            R_edge.row(j) = (p.signs[j] / 4.0) * g.edge_vectors[e].transpose();
        }
        const Mat3 Me = R_face * K[c].K * R_face.transpose() / vol;
        const Mat3 Mf = R_edge * K[c].K * R_edge.transpose() / vol;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                s.edge_to_dual_face(epos[i], epos[j]) += Me(i, j);
                s.face_to_dual_edge(fpos[i], fpos[j]) += Mf(i, j);
            }
    }
    s.edge_to_dual_face = symmetrized(s.edge_to_dual_face);
    s.face_to_dual_edge = symmetrized(s.face_to_dual_edge);
    return s;
}

PiecewiseInverse piecewise_local_inverse(const TetMesh& mesh, const GeometricVectors& g,
                                         const DualGeometry& dual,
                                         std::span<const MaterialTensor> K, Index node)
{
    const PiecewiseSums s = piecewise_sums(mesh, g, dual, K, node);
    const auto edges = mesh.node_edges(node);
    const auto faces = mesh.node_faces(node);
    PiecewiseInverse out;
    out.dual_face = {spd_inverse(s.edge_to_dual_face), {edges.begin(), edges.end()}};
    out.dual_edge = {spd_inverse(s.face_to_dual_edge), {faces.begin(), faces.end()}};
    return out;
}

std::vector<DualCellConstruction> hybrid_material_strategy(const TetMesh& mesh,
                                                           std::span<const MaterialTensor> K,
                                                           MaterialMode mode)
{
    if (static_cast<Index>(K.size()) != mesh.num_cells())
        throw Error(ErrorCode::InvalidArgument, "one material tensor per cell is required");
    const auto fallback = mode == MaterialMode::Piecewise ? DualCellConstruction::Piecewise
                                                          : DualCellConstruction::WeightedAverage;
    std::vector<DualCellConstruction> choice(mesh.num_nodes(), DualCellConstruction::Explicit);
    for (Index n = 0; n < mesh.num_nodes(); ++n) {
        const auto cells = mesh.node_cells(n);
        const bool uniform = std::all_of(cells.begin(), cells.end(),
                                         [&](Index c) { return K[c] == K[cells.front()]; });
        if (!uniform)
            choice[n] = fallback;
    }
    return choice;
}

} // namespace dualhodge
