#include "dualhodge/assembly.hpp"

#include <algorithm>
#include <numeric>

namespace dualhodge {

SparseAssembler::SparseAssembler(Index n, std::span<const std::vector<Index>> cliques)
    : SparseAssembler(n)
{
    build_pattern([&](auto&& emit) {
        for (const auto& c : cliques)
            emit(std::span<const Index>(c));
    });
}

void SparseAssembler::check(Index i) const
{
    if (i < 0 || i >= m_.rows)
        throw Error(ErrorCode::InvalidArgument, "assembly index " + std::to_string(i) +
                                                    " outside 0.." + std::to_string(m_.rows - 1));
}

void SparseAssembler::finalize_rows(std::vector<std::vector<Index>>& rows)
{
    m_.row_offsets.assign(static_cast<std::size_t>(m_.rows) + 1, 0);
    for (Index r = 0; r < m_.rows; ++r) {
        auto& row = rows[r];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        m_.row_offsets[r + 1] = m_.row_offsets[r] + static_cast<std::int64_t>(row.size());
    }
    m_.col_indices.reserve(static_cast<std::size_t>(m_.row_offsets.back()));
    for (auto& row : rows) {
        m_.col_indices.insert(m_.col_indices.end(), row.begin(), row.end());
        std::vector<Index>().swap(row);
    }
    m_.values.assign(m_.col_indices.size(), 0.0);
}

std::int64_t SparseAssembler::slot(Index r, Index c) const
{
    auto cols = m_.row_cols(r);
    auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c)
        throw Error(ErrorCode::InvalidArgument, "assembly entry (" + std::to_string(r) + ", " +
                                                    std::to_string(c) + ") is not in the pattern");
    return m_.row_offsets[r] + (it - cols.begin());
}

void SparseAssembler::add(std::span<const Index> entities, const Eigen::MatrixXd& local)
{
    const auto m = static_cast<Eigen::Index>(entities.size());
    if (local.rows() != m || local.cols() != m)
        throw Error(ErrorCode::InvalidArgument, "local matrix size does not match its entity list");
    for (Index i : entities)
        check(i);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            m_.values[slot(entities[i], entities[j])] += local(i, j);
}

SparseMatrix SparseAssembler::finish() &&
{
    SparseMatrix out;
    out.rows = m_.rows;
    out.cols = m_.cols;
    out.row_offsets.assign(static_cast<std::size_t>(m_.rows) + 1, 0);
    out.col_indices.reserve(m_.col_indices.size());
    out.values.reserve(m_.values.size());
    for (Index r = 0; r < m_.rows; ++r) {
        for (auto k = m_.row_offsets[r]; k < m_.row_offsets[r + 1]; ++k) {
            if (m_.values[k] != 0.0) {
                out.col_indices.push_back(m_.col_indices[k]);
                out.values.push_back(m_.values[k]);
            }
        }
        out.row_offsets[r + 1] = static_cast<std::int64_t>(out.values.size());
    }
    return out;
}

SparseMatrix assemble(Index n, std::vector<Contribution> contributions)
{
    for (const auto& c : contributions) {
        std::vector<Index> sorted = c.entities;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw Error(ErrorCode::InvalidArgument, "contribution lists an entity twice");
    }
    std::stable_sort(contributions.begin(), contributions.end(),
                     [](const Contribution& a, const Contribution& b) {
                         return a.entities < b.entities;
                     });
    std::vector<std::vector<Index>> cliques;
    cliques.reserve(contributions.size());
    for (const auto& c : contributions)
        cliques.push_back(c.entities);
    SparseAssembler a(n, cliques);
    for (const auto& c : contributions)
        a.add(c);
    return std::move(a).finish();
}

LocalMatrix dual_edge_inverse(const TetMesh& mesh, const GeometricVectors& g,
                              const DualGeometry& dual, std::span<const MaterialTensor> K,
                              Index node, DualCellConstruction construction,
                              const StabilizationParams& stab)
{
    switch (construction) {
    case DualCellConstruction::Piecewise: {
        const PiecewiseSums s = piecewise_sums(mesh, g, dual, K, node);
        const auto faces = mesh.node_faces(node);
        return {spd_inverse(s.face_to_dual_edge), {faces.begin(), faces.end()}};
    }
    case DualCellConstruction::WeightedAverage:
        return local_inverse_mass_dual_edge(dual_cell_geometry(mesh, g, dual, node),
                                            weighted_average_material(mesh, dual, K, node), stab);
    case DualCellConstruction::Explicit:
    default:
        return local_inverse_mass_dual_edge(dual_cell_geometry(mesh, g, dual, node),
                                            K[mesh.node_cells(node).front()].inverse(), stab);
    }
}

DualCellInverses dual_cell_inverses(const TetMesh& mesh, const GeometricVectors& g,
                                    const DualGeometry& dual, std::span<const MaterialTensor> K,
                                    Index node, DualCellConstruction construction,
                                    const StabilizationParams& stab)
{
    DualCellInverses out;
    out.construction = construction;
    if (construction == DualCellConstruction::Piecewise) {
        PiecewiseInverse p = piecewise_local_inverse(mesh, g, dual, K, node);
        out.dual_face = std::move(p.dual_face);
        out.dual_edge = std::move(p.dual_edge);
        return out;
    }
    const MaterialTensor Kt = construction == DualCellConstruction::WeightedAverage
                                  ? weighted_average_material(mesh, dual, K, node)
                                  : K[mesh.node_cells(node).front()].inverse();
    const DualCellGeometry dc = dual_cell_geometry(mesh, g, dual, node);
    out.dual_face = local_inverse_mass_dual_face(dc, Kt, stab);
    out.dual_edge = local_inverse_mass_dual_edge(dc, Kt, stab);
    return out;
}

GlobalOperators assemble_global_operators(const TetMesh& mesh, std::span<const MaterialTensor> K,
                                          MaterialMode mode, const StabilizationParams& stab)
{
    if (static_cast<Index>(K.size()) != mesh.num_cells())
        throw Error(ErrorCode::InvalidArgument, "one material tensor per cell is required");
    for (const auto& k : K)
        k.validate();
    const GeometricVectors g = geometric_vectors(mesh);
    const DualGeometry dual = build_dual_geometry(mesh, g);

    auto me = SparseAssembler::from_cliques(mesh.num_edges(), [&](auto&& emit) {
        for (Index c = 0; c < mesh.num_cells(); ++c)
            emit(std::span<const Index>(mesh.cell_edges(c)));
    });
    auto mf = SparseAssembler::from_cliques(mesh.num_faces(), [&](auto&& emit) {
        for (Index c = 0; c < mesh.num_cells(); ++c)
            emit(std::span<const Index>(mesh.cell_faces(c)));
    });
    for (Index c = 0; c < mesh.num_cells(); ++c) {
        me.add(local_mass_edge(mesh, g, dual.cells[c], c, K[c], stab));
        mf.add(local_mass_face(mesh, g, dual.cells[c], c, K[c], stab));
    }

    auto mft = SparseAssembler::from_cliques(mesh.num_edges(), [&](auto&& emit) {
        for (Index n = 0; n < mesh.num_nodes(); ++n)
            emit(mesh.node_edges(n));
    });
    auto met = SparseAssembler::from_cliques(mesh.num_faces(), [&](auto&& emit) {
        for (Index n = 0; n < mesh.num_nodes(); ++n)
            emit(mesh.node_faces(n));
    });
    const auto choice = hybrid_material_strategy(mesh, K, mode);
    for (Index n = 0; n < mesh.num_nodes(); ++n) {
        const DualCellInverses inv = dual_cell_inverses(mesh, g, dual, K, n, choice[n], stab);
        mft.add(inv.dual_face);
        met.add(inv.dual_edge);
    }

    GlobalOperators ops;
    ops.ME = std::move(me).finish();
    ops.MF = std::move(mf).finish();
    ops.MFt = std::move(mft).finish();
    ops.MEt = std::move(met).finish();
    return ops;
}

} // namespace dualhodge
