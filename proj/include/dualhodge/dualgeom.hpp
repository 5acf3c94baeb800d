#pragma once

#include <array>
#include <string>
#include <vector>

#include "dualhodge/mesh.hpp"

namespace dualhodge {

/// Restricted dual vectors of one tetrahedron. Every vector is oriented like
/// the global primal entity it is paired with.
struct CellDualVectors {
    /// ẽ_f|c for local face i: from the cell barycenter to the face barycenter,
    /// signed with the cell-face incidence.
    std::array<Vec3, 4> dual_edges;
    /// f̃_e|c for local edge k: the quadrilateral b_e, b_f1, b_c, b_f2.
    std::array<Vec3, 6> dual_faces;
    double volume = 0.0;

    /// |c̃ ∩ c|, identical for the four nodes of a tetrahedron.
    double corner_volume() const { return volume / 4.0; }
};

CellDualVectors cell_dual_vectors(const TetMesh& mesh, const GeometricVectors& g, Index cell);

/// Edge/face pairs meeting at a corner (cell, local node a). Entry j pairs the
/// edge from a to its j-th neighbour b with the face opposite b; sign is the
/// r with r * (f . e) > 0 for the globally oriented vectors.
struct CornerPairing {
    std::array<int, 3> local_edges;
    std::array<int, 3> local_faces;
    std::array<int, 3> signs;
};

CornerPairing corner_pairing(const TetMesh& mesh, const GeometricVectors& g, Index cell,
                             int local_node);

/// Σ r_i f_i ⊗ e_i − 3|c| I at a corner.
Mat3 fundamental_identity_residual(const TetMesh& mesh, const GeometricVectors& g, Index cell,
                                   int local_node);

/// Stub vectors of a corner, aligned with CornerPairing:
/// s = r f / 6 − f̃_e|c and l = r e / 4 − ẽ_f|c.
struct CornerStubs {
    CornerPairing pairing;
    std::array<Vec3, 3> face_stubs; ///< s_{n,e}|c
    std::array<Vec3, 3> edge_stubs; ///< l_{n,f}|c
};

CornerStubs corner_stubs(const TetMesh& mesh, const GeometricVectors& g, const CellDualVectors& dv,
                         Index cell, int local_node);

/// s_{n,e}|c from the two triangles (b_e, b_f1, p) and (b_e, b_f2, p) with
/// p = 3/4 n + 1/4 n1, independently of the identity above.
Vec3 face_stub_from_triangles(const TetMesh& mesh, const GeometricVectors& g,
                              const CellDualVectors& dv, Index cell, int local_node,
                              int local_edge);

/// l_{n,f}|c as the segment from b_f to p = 1/2 n + 1/4 n1 + 1/4 n2.
Vec3 edge_stub_from_segment(const TetMesh& mesh, const GeometricVectors& g, Index cell,
                            int local_node, int local_face);

/// Dual geometry of a whole mesh. Stub sums are stored aligned with
/// TetMesh::node_edges / node_faces (use the mesh offsets to index them).
struct DualGeometry {
    std::vector<CellDualVectors> cells;
    std::vector<Vec3> dual_edges;    ///< ẽ_f per face
    std::vector<Vec3> dual_faces;    ///< f̃_e per edge
    std::vector<double> dual_volumes; ///< |c̃_n| per node
    std::vector<Vec3> face_stubs;    ///< s_{n,e}, flattened over (n, e ∈ E(n))
    std::vector<Vec3> edge_stubs;    ///< l_{n,f}, flattened over (n, f ∈ F(n))
};

DualGeometry build_dual_geometry(const TetMesh& mesh, const GeometricVectors& g);

/// Vectors of one dual cell c̃_n.
struct DualCellGeometry {
    Index node = -1;
    double volume = 0.0;
    bool boundary = false;
    std::span<const Index> edges;  ///< E(n)
    std::vector<Vec3> half_edges;  ///< e / 2
    std::vector<Vec3> dual_faces;  ///< f̃_e + s_{n,e}
    std::span<const Index> faces;  ///< F(n)
    std::vector<Vec3> third_faces; ///< f / 3
    std::vector<Vec3> dual_edges;  ///< ẽ_f + l_{n,f}
};

DualCellGeometry dual_cell_geometry(const TetMesh& mesh, const GeometricVectors& g,
                                    const DualGeometry& dual, Index node);

/// Worst residual of one identity family over a mesh.
struct IdentityResidual {
    std::string name;
    double worst = 0.0;
    std::string location;
    std::int64_t checked = 0;
};

/// Evaluates all identity families, each normalized by its natural scale
/// (|c|, 3|c|, |c̃| or the norm of the reference vector).
std::vector<IdentityResidual> check_identities(const TetMesh& mesh);

} // namespace dualhodge
