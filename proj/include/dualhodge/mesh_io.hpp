#pragma once

#include <iosfwd>
#include <string>

#include "dualhodge/mesh.hpp"

namespace dualhodge {

enum class MeshFormat { Msh2, Simple };

/// Parses "msh2"/"msh" or "simple".
MeshFormat parse_mesh_format(const std::string& name);

/// Loads a mesh file. Indices in files are 1-based.
TetMesh load_mesh(const std::string& path, MeshFormat format);

/// Simple format:
///
///     <num_nodes>
///     x y z                       (num_nodes lines)
///     <num_cells>
///     n1 n2 n3 n4 tag             (num_cells lines)
///     [<num_boundary_faces>
///      n1 n2 n3 tag]              (optional block)
///
/// Lines starting with '#' are comments.
TetMesh read_simple(std::istream& in);

/// Gmsh MSH 2.2 ASCII subset: $Nodes and $Elements, element types 4
/// (tetrahedron, first tag is the material) and 2 (triangle, first tag is the
/// boundary tag). Other element types are skipped.
TetMesh read_msh2(std::istream& in);

/// Writes the simple format with full round-trip precision, including the
/// boundary face tags that are nonzero.
void write_simple(const TetMesh& mesh, std::ostream& out);
void write_simple(const TetMesh& mesh, const std::string& path);

} // namespace dualhodge
