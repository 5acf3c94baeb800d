#pragma once

#include <vector>

#include <Eigen/Core>

#include "dualhodge/dualgeom.hpp"

namespace dualhodge {

/// Symmetric positive definite 3x3 material tensor.
struct MaterialTensor {
    Mat3 K = Mat3::Identity();

    static MaterialTensor isotropic(double value) { return {value * Mat3::Identity()}; }
    MaterialTensor inverse() const;
    /// Throws unless K is exactly symmetric, finite and positive definite.
    void validate() const;
    bool operator==(const MaterialTensor& o) const { return K == o.K; }
};

/// Weights of the stabilization term. With explicit weights empty, every
/// α_i = scale * trace(consistent term) / m.
struct StabilizationParams {
    double scale = 1.0;
    std::vector<double> weights;
};

/// A dense local matrix and the global entities its rows refer to.
struct LocalMatrix {
    Eigen::MatrixXd values;
    std::vector<Index> entities;
};

using RowVectors = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Orthonormal basis of the orthogonal complement of the column space of a
/// full-rank m x 3 matrix (columns of the result, m x (m-3)).
Eigen::MatrixXd complement_basis(const RowVectors& range);

/// The two parts of a local matrix built from geometric vectors:
/// consistent = image K imageᵀ / volume and stabilization = W diag(α) Wᵀ
/// with W spanning the complement of im(range).
struct MassTerms {
    Eigen::MatrixXd consistent;
    Eigen::MatrixXd stabilization;
    Eigen::MatrixXd total() const;
};

MassTerms mass_terms(const RowVectors& image, const RowVectors& range, const Mat3& K,
                     double volume, const StabilizationParams& stab);

/// Faces of a cell to dual edges: maps face fluxes to dual-edge voltages.
/// Rows follow the cell's local face order.
LocalMatrix local_mass_face(const TetMesh& mesh, const GeometricVectors& g,
                            const CellDualVectors& dv, Index cell, const MaterialTensor& K,
                            const StabilizationParams& stab = {});
MassTerms local_mass_face_terms(const TetMesh& mesh, const GeometricVectors& g,
                                const CellDualVectors& dv, Index cell, const MaterialTensor& K,
                                const StabilizationParams& stab = {});

/// Edges of a cell to dual faces. Rows follow the cell's local edge order.
LocalMatrix local_mass_edge(const TetMesh& mesh, const GeometricVectors& g,
                            const CellDualVectors& dv, Index cell, const MaterialTensor& K,
                            const StabilizationParams& stab = {});
MassTerms local_mass_edge_terms(const TetMesh& mesh, const GeometricVectors& g,
                                const CellDualVectors& dv, Index cell, const MaterialTensor& K,
                                const StabilizationParams& stab = {});

/// Dual faces of c̃_n to primal edges (order #E(n)). Kt is the dual-cell
/// material, the inverse of the primal one for a homogeneous cell.
LocalMatrix local_inverse_mass_dual_face(const DualCellGeometry& dc, const MaterialTensor& Kt,
                                         const StabilizationParams& stab = {});
MassTerms local_inverse_mass_dual_face_terms(const DualCellGeometry& dc, const MaterialTensor& Kt,
                                             const StabilizationParams& stab = {});

/// Dual edges of c̃_n to primal faces (order #F(n)).
LocalMatrix local_inverse_mass_dual_edge(const DualCellGeometry& dc, const MaterialTensor& Kt,
                                         const StabilizationParams& stab = {});
MassTerms local_inverse_mass_dual_edge_terms(const DualCellGeometry& dc, const MaterialTensor& Kt,
                                             const StabilizationParams& stab = {});

/// ((1/|c̃|) Σ_c |c̃∩c| K_c)⁻¹ over the cells around a node.
MaterialTensor weighted_average_material(const TetMesh& mesh, const DualGeometry& dual,
                                         std::span<const MaterialTensor> K, Index node);

/// Inverse matrices of a dual cell built from the per-cell pieces c̃_n ∩ c,
/// each carrying its own primal material, summed and inverted.
struct PiecewiseInverse {
    LocalMatrix dual_face; ///< order #E(n)
    LocalMatrix dual_edge; ///< order #F(n)
};

PiecewiseInverse piecewise_local_inverse(const TetMesh& mesh, const GeometricVectors& g,
                                         const DualGeometry& dual,
                                         std::span<const MaterialTensor> K, Index node);

/// The summed piece matrices before inversion (order #E(n) and #F(n)).
struct PiecewiseSums {
    Eigen::MatrixXd edge_to_dual_face;
    Eigen::MatrixXd face_to_dual_edge;
};

PiecewiseSums piecewise_sums(const TetMesh& mesh, const GeometricVectors& g,
                             const DualGeometry& dual, std::span<const MaterialTensor> K,
                             Index node);

enum class MaterialMode { Weighted, Piecewise };
enum class DualCellConstruction { Explicit, WeightedAverage, Piecewise };

/// Per-node choice: explicit when every cell around the node carries the same
/// tensor, otherwise the fallback named by mode.
std::vector<DualCellConstruction> hybrid_material_strategy(const TetMesh& mesh,
                                                           std::span<const MaterialTensor> K,
                                                           MaterialMode mode);

/// Inverse of an SPD matrix via Cholesky; throws NotPositiveDefinite.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a);

} // namespace dualhodge
