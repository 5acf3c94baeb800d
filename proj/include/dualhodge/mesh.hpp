#pragma once

#include <array>
#include <span>
#include <vector>

#include "dualhodge/sparse.hpp"
#include "dualhodge/types.hpp"

namespace dualhodge {

/// Local edge k of a tetrahedron joins local nodes kLocalEdges[k].
inline constexpr std::array<std::array<int, 2>, 6> kLocalEdges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
/// Local face i is the face opposite local node i.
inline constexpr std::array<std::array<int, 3>, 4> kLocalFaces{
    {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

/// Local edge index joining local nodes a != b.
int local_edge_index(int a, int b);

/// A boundary triangle carrying a tag, as read from a mesh file.
struct TaggedTriangle {
    std::array<Index, 3> nodes;
    int tag = 0;
};

/// Tetrahedral mesh with derived edges and faces.
///
/// Orientation conventions: an edge is directed from its lower to its higher
/// node index; a face is oriented by the right-hand rule over its ascending
/// node triple. Every stored cell has positive volume in its stored node order.
/// The object is immutable once built.
class TetMesh {
public:
    /// Builds topology and validates geometry. Cells with negative signed
    /// volume are reordered; cells flatter than 1e-14 * extent^3 are rejected
    /// with DegenerateCellError. Tagged triangles that match an interior face
    /// are ignored; triangles that match no face are an error.
    static TetMesh build(std::vector<Vec3> nodes, std::vector<std::array<Index, 4>> cells,
                         std::vector<int> cell_tags = {},
                         std::span<const TaggedTriangle> boundary_tags = {});

    Index num_nodes() const { return static_cast<Index>(nodes_.size()); }
    Index num_edges() const { return static_cast<Index>(edges_.size()); }
    Index num_faces() const { return static_cast<Index>(faces_.size()); }
    Index num_cells() const { return static_cast<Index>(cells_.size()); }

    std::span<const Vec3> nodes() const { return nodes_; }
    const Vec3& node(Index n) const { return nodes_[n]; }
    const std::array<Index, 4>& cell(Index c) const { return cells_[c]; }
    const std::array<Index, 2>& edge(Index e) const { return edges_[e]; }
    const std::array<Index, 3>& face(Index f) const { return faces_[f]; }

    const std::array<Index, 6>& cell_edges(Index c) const { return cell_edges_[c]; }
    const std::array<Index, 4>& cell_faces(Index c) const { return cell_faces_[c]; }
    /// +1 when local edge k runs in the global edge direction.
    int cell_edge_sign(Index c, int k) const { return cell_edge_signs_[c][k]; }
    /// Cell-face incidence: +1 when the face orientation points out of the cell.
    int cell_face_sign(Index c, int i) const { return cell_face_signs_[c][i]; }

    /// The one or two cells sharing a face; second is -1 on the boundary.
    const std::array<Index, 2>& face_cells(Index f) const { return face_cells_[f]; }
    bool is_boundary_face(Index f) const { return face_cells_[f][1] < 0; }
    std::span<const Index> boundary_faces() const { return boundary_faces_; }
    bool is_boundary_node(Index n) const { return boundary_node_[n] != 0; }
    bool is_boundary_edge(Index e) const { return boundary_edge_[e] != 0; }

    int cell_tag(Index c) const { return cell_tags_[c]; }
    /// Tag of a boundary face (0 when untagged); always 0 for interior faces.
    int face_tag(Index f) const { return face_tags_[f]; }
    std::span<const int> cell_tags() const { return cell_tags_; }

    /// Adjacency lists, each sorted by ascending index.
    std::span<const Index> node_cells(Index n) const { return slice(node_cells_, n); }
    std::span<const Index> node_edges(Index n) const { return slice(node_edges_, n); }
    std::span<const Index> node_faces(Index n) const { return slice(node_faces_, n); }
    std::span<const Index> edge_cells(Index e) const { return slice(edge_cells_, e); }
    std::span<const Index> edge_faces(Index e) const { return slice(edge_faces_, e); }
    /// Position of node n's first entry in the flattened node_edges / node_faces
    /// lists, for arrays aligned with them.
    std::int64_t node_edges_offset(Index n) const { return node_edges_.offsets[n]; }
    std::int64_t node_faces_offset(Index n) const { return node_faces_.offsets[n]; }
    std::int64_t node_edges_total() const { return node_edges_.offsets.back(); }
    std::int64_t node_faces_total() const { return node_faces_.offsets.back(); }

    /// Global id of the edge/face with these nodes, or -1.
    Index find_edge(Index a, Index b) const;
    Index find_face(Index a, Index b, Index c) const;

    /// Largest side of the axis-aligned bounding box.
    double extent() const { return extent_; }

private:
    struct Adjacency {
        std::vector<std::int64_t> offsets;
        std::vector<Index> items;
    };
    static std::span<const Index> slice(const Adjacency& a, Index i)
    {
        return {a.items.data() + a.offsets[i], static_cast<std::size_t>(a.offsets[i + 1] - a.offsets[i])};
    }

    std::vector<Vec3> nodes_;
    std::vector<std::array<Index, 4>> cells_;
    std::vector<int> cell_tags_;
    std::vector<std::array<Index, 2>> edges_;
    std::vector<std::array<Index, 3>> faces_;
    std::vector<std::array<Index, 6>> cell_edges_;
    std::vector<std::array<std::int8_t, 6>> cell_edge_signs_;
    std::vector<std::array<Index, 4>> cell_faces_;
    std::vector<std::array<std::int8_t, 4>> cell_face_signs_;
    std::vector<std::array<Index, 2>> face_cells_;
    std::vector<int> face_tags_;
    std::vector<Index> boundary_faces_;
    std::vector<std::uint8_t> boundary_node_;
    std::vector<std::uint8_t> boundary_edge_;
    Adjacency node_cells_, node_edges_, node_faces_, edge_cells_, edge_faces_;
    double extent_ = 0.0;
};

/// Signed incidence matrices of the primal complex.
struct IncidenceMatrices {
    IncidenceMatrix G; ///< edges x nodes
    IncidenceMatrix C; ///< faces x edges
    IncidenceMatrix D; ///< cells x faces
};

IncidenceMatrices build_incidence(const TetMesh& mesh);

/// Edge vectors, face vectors, barycenters and measures of the primal grid,
/// oriented consistently with build_incidence.
struct GeometricVectors {
    std::vector<Vec3> edge_vectors;
    std::vector<Vec3> face_vectors;
    std::vector<Vec3> edge_barycenters;
    std::vector<Vec3> face_barycenters;
    std::vector<Vec3> cell_barycenters;
    std::vector<double> edge_lengths;
    std::vector<double> face_areas;
    std::vector<double> cell_volumes;
};

GeometricVectors geometric_vectors(const TetMesh& mesh);

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Entry of C for a face (sorted triple) and edge (sorted pair); 0 if the
/// edge is not on the face.
int face_edge_sign(const std::array<Index, 3>& face, const std::array<Index, 2>& edge);

/// Entry of D for cell c and face f; 0 if f is not a face of c.
int cell_face_incidence(const TetMesh& mesh, Index c, Index f);

} // namespace dualhodge
