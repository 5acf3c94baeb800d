#pragma once

#include <span>
#include <vector>

#include "dualhodge/hodge.hpp"
#include "dualhodge/sparse.hpp"

namespace dualhodge {

/// Assembles square local matrices into a global CSR matrix whose pattern is
/// fixed up front from the entity cliques. Values accumulate in the order the
/// contributions are added, so a fixed contribution order gives bitwise
/// reproducible results without a coordinate staging buffer.
class SparseAssembler {
public:
    SparseAssembler(Index n, std::span<const std::vector<Index>> cliques);

    /// Builds the pattern from a callback that yields each clique in turn:
    /// emit(std::span<const Index>).
    template <typename ForEachClique>
    static SparseAssembler from_cliques(Index n, ForEachClique&& for_each)
    {
        SparseAssembler a(n);
        a.build_pattern(std::forward<ForEachClique>(for_each));
        return a;
    }

    void add(std::span<const Index> entities, const Eigen::MatrixXd& local);
    void add(const LocalMatrix& m) { add(m.entities, m.values); }

    /// Returns the matrix with exact zeros removed.
    SparseMatrix finish() &&;

private:
    explicit SparseAssembler(Index n) { m_.rows = m_.cols = n; }

    template <typename ForEachClique>
    void build_pattern(ForEachClique&& for_each)
    {
        std::vector<std::vector<Index>> rows(static_cast<std::size_t>(m_.rows));
        for_each([&](std::span<const Index> clique) {
            for (Index i : clique) {
                check(i);
                rows[i].insert(rows[i].end(), clique.begin(), clique.end());
            }
        });
        finalize_rows(rows);
    }
    void finalize_rows(std::vector<std::vector<Index>>& rows);
    void check(Index i) const;
    std::int64_t slot(Index r, Index c) const;

    SparseMatrix m_;
};

/// A local matrix paired with the global entities of its rows/columns.
using Contribution = LocalMatrix;

/// Sums contributions into an n x n matrix. Contributions are ordered by their
/// entity lists first, so the result does not depend on input order.
SparseMatrix assemble(Index n, std::vector<Contribution> contributions);

/// Global mass and inverse-mass operators for one material field.
struct GlobalOperators {
    SparseMatrix ME;  ///< edges x edges
    SparseMatrix MF;  ///< faces x faces
    SparseMatrix MFt; ///< dual faces x dual faces (indexed by edges)
    SparseMatrix MEt; ///< dual edges x dual edges (indexed by faces)
};

/// Local inverse-mass matrices of node n under the hybrid strategy.
struct DualCellInverses {
    LocalMatrix dual_face;
    LocalMatrix dual_edge;
    DualCellConstruction construction = DualCellConstruction::Explicit;
};

DualCellInverses dual_cell_inverses(const TetMesh& mesh, const GeometricVectors& g,
                                    const DualGeometry& dual, std::span<const MaterialTensor> K,
                                    Index node, DualCellConstruction construction,
                                    const StabilizationParams& stab = {});

/// Only the dual-edge inverse of node n (the one the cell-potential solver needs).
LocalMatrix dual_edge_inverse(const TetMesh& mesh, const GeometricVectors& g,
                              const DualGeometry& dual, std::span<const MaterialTensor> K,
                              Index node, DualCellConstruction construction,
                              const StabilizationParams& stab = {});

/// K is the primal material per cell (maps primal DoFs to dual DoFs).
GlobalOperators assemble_global_operators(const TetMesh& mesh, std::span<const MaterialTensor> K,
                                          MaterialMode mode = MaterialMode::Piecewise,
                                          const StabilizationParams& stab = {});

} // namespace dualhodge
