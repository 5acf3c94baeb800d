#include "dualhodge/dualgeom.hpp"

#include <algorithm>
#include <cmath>

namespace dualhodge {

namespace {

std::int64_t position_in(std::span<const Index> sorted, Index item)
{
    auto it = std::lower_bound(sorted.begin(), sorted.end(), item);
    return it - sorted.begin();
}

/// Tracks the largest residual seen for one identity family.
struct Worst {
    IdentityResidual r;
    explicit Worst(std::string name) { r.name = std::move(name); }
    void update(double value, const auto& where)
    {
        ++r.checked;
        if (!(value <= r.worst)) {
            r.worst = value;
            r.location = where();
        }
    }
};

} // namespace

CellDualVectors cell_dual_vectors(const TetMesh& mesh, const GeometricVectors& g, Index cell)
{
    CellDualVectors dv;
    const Vec3& bc = g.cell_barycenters[cell];
    dv.volume = g.cell_volumes[cell];
    const auto& faces = mesh.cell_faces(cell);
    for (int i = 0; i < 4; ++i)
        dv.dual_edges[i] = mesh.cell_face_sign(cell, i) * (g.face_barycenters[faces[i]] - bc);

    for (int k = 0; k < 6; ++k) {
        Index e = mesh.cell_edges(cell)[k];
        const Vec3 be = g.edge_barycenters[e] - bc;
        Vec3 sum = Vec3::Zero();
        // The two faces through local edge k are those opposite its two non-endpoints.
        for (int i = 0; i < 4; ++i) {
            if (i == kLocalEdges[k][0] || i == kLocalEdges[k][1])
                continue;
            Index f = faces[i];
            int s = mesh.cell_face_sign(cell, i) * face_edge_sign(mesh.face(f), mesh.edge(e));
            sum += s * (g.face_barycenters[f] - bc).cross(be);
        }
        dv.dual_faces[k] = 0.5 * sum;
    }
    return dv;
}

CornerPairing corner_pairing(const TetMesh& mesh, const GeometricVectors& g, Index cell,
                             int local_node)
{
    CornerPairing p;
    int j = 0;
    for (int b = 0; b < 4; ++b) {
        if (b == local_node)
            continue;
        int k = local_edge_index(local_node, b);
        p.local_edges[j] = k;
        p.local_faces[j] = b;
        const Vec3& e = g.edge_vectors[mesh.cell_edges(cell)[k]];
        const Vec3& f = g.face_vectors[mesh.cell_faces(cell)[b]];
        p.signs[j] = f.dot(e) > 0 ? 1 : -1;
        ++j;
    }
    return p;
}

Mat3 fundamental_identity_residual(const TetMesh& mesh, const GeometricVectors& g, Index cell,
                                   int local_node)
{
    CornerPairing p = corner_pairing(mesh, g, cell, local_node);
    Mat3 sum = Mat3::Zero();
    for (int j = 0; j < 3; ++j) {
        const Vec3& e = g.edge_vectors[mesh.cell_edges(cell)[p.local_edges[j]]];
        const Vec3& f = g.face_vectors[mesh.cell_faces(cell)[p.local_faces[j]]];
        sum += p.signs[j] * f * e.transpose();
    }
    return sum - 3.0 * g.cell_volumes[cell] * Mat3::Identity();
}

CornerStubs corner_stubs(const TetMesh& mesh, const GeometricVectors& g, const CellDualVectors& dv,
                         Index cell, int local_node)
{
    CornerStubs s;
    s.pairing = corner_pairing(mesh, g, cell, local_node);
    for (int j = 0; j < 3; ++j) {
        int k = s.pairing.local_edges[j];
        int i = s.pairing.local_faces[j];
        int r = s.pairing.signs[j];
        const Vec3& e = g.edge_vectors[mesh.cell_edges(cell)[k]];
        const Vec3& f = g.face_vectors[mesh.cell_faces(cell)[i]];
        s.face_stubs[j] = (r / 6.0) * f - dv.dual_faces[k];
        s.edge_stubs[j] = (r / 4.0) * e - dv.dual_edges[i];
    }
    return s;
}

Vec3 face_stub_from_triangles(const TetMesh& mesh, const GeometricVectors& g,
                              const CellDualVectors& dv, Index cell, int local_node,
                              int local_edge)
{
    const auto& le = kLocalEdges[local_edge];
    int other = le[0] == local_node ? le[1] : le[0];
    const auto& cn = mesh.cell(cell);
    const Vec3 p = 0.75 * mesh.node(cn[local_node]) + 0.25 * mesh.node(cn[other]);
    const Vec3& bc = g.cell_barycenters[cell];
    const Vec3& be = g.edge_barycenters[mesh.cell_edges(cell)[local_edge]];

    std::array<int, 2> through{};
    int t = 0;
    for (int i = 0; i < 4; ++i)
        if (i != le[0] && i != le[1])
            through[t++] = i;
    Vec3 bf1 = g.face_barycenters[mesh.cell_faces(cell)[through[0]]];
    Vec3 bf2 = g.face_barycenters[mesh.cell_faces(cell)[through[1]]];
    // Order the faces so that the cycle b_c, b_f1, b_e, b_f2 carries f̃_e|c.
    if ((0.5 * (be - bc).cross(bf2 - bf1)).dot(dv.dual_faces[local_edge]) < 0)
        std::swap(bf1, bf2);
    const Vec3 t1 = 0.5 * (bf1 - be).cross(p - be);
    const Vec3 t2 = 0.5 * (be - bf2).cross(p - bf2);
    return t1 + t2;
}

Vec3 edge_stub_from_segment(const TetMesh& mesh, const GeometricVectors& g, Index cell,
                            int local_node, int local_face)
{
    const auto& cn = mesh.cell(cell);
    Vec3 p = 0.5 * mesh.node(cn[local_node]);
    for (int a : kLocalFaces[local_face])
        if (a != local_node)
            p += 0.25 * mesh.node(cn[a]);
    const Vec3& bf = g.face_barycenters[mesh.cell_faces(cell)[local_face]];
    return mesh.cell_face_sign(cell, local_face) * (p - bf);
}

DualGeometry build_dual_geometry(const TetMesh& mesh, const GeometricVectors& g)
{
    DualGeometry d;
    d.cells.resize(mesh.num_cells());
    d.dual_edges.assign(mesh.num_faces(), Vec3::Zero());
    d.dual_faces.assign(mesh.num_edges(), Vec3::Zero());
    d.dual_volumes.assign(mesh.num_nodes(), 0.0);
    d.face_stubs.assign(static_cast<std::size_t>(mesh.node_edges_total()), Vec3::Zero());
    d.edge_stubs.assign(static_cast<std::size_t>(mesh.node_faces_total()), Vec3::Zero());

    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const CellDualVectors dv = cell_dual_vectors(mesh, g, c);
        d.cells[c] = dv;
        for (int i = 0; i < 4; ++i)
            d.dual_edges[mesh.cell_faces(c)[i]] += dv.dual_edges[i];
        for (int k = 0; k < 6; ++k)
            d.dual_faces[mesh.cell_edges(c)[k]] += dv.dual_faces[k];
        for (int a = 0; a < 4; ++a) {
            Index n = mesh.cell(c)[a];
            d.dual_volumes[n] += dv.corner_volume();
            const CornerStubs s = corner_stubs(mesh, g, dv, c, a);
            for (int j = 0; j < 3; ++j) {
                Index e = mesh.cell_edges(c)[s.pairing.local_edges[j]];
                Index f = mesh.cell_faces(c)[s.pairing.local_faces[j]];
                d.face_stubs[mesh.node_edges_offset(n) + position_in(mesh.node_edges(n), e)] +=
                    s.face_stubs[j];
                d.edge_stubs[mesh.node_faces_offset(n) + position_in(mesh.node_faces(n), f)] +=
                    s.edge_stubs[j];
            }
        }
    }
    return d;
}

DualCellGeometry dual_cell_geometry(const TetMesh& mesh, const GeometricVectors& g,
                                    const DualGeometry& dual, Index node)
{
    DualCellGeometry dc;
    dc.node = node;
    dc.volume = dual.dual_volumes[node];
    dc.boundary = mesh.is_boundary_node(node);
    dc.edges = mesh.node_edges(node);
    dc.faces = mesh.node_faces(node);
    const auto eo = mesh.node_edges_offset(node);
    const auto fo = mesh.node_faces_offset(node);
    dc.half_edges.reserve(dc.edges.size());
    dc.dual_faces.reserve(dc.edges.size());
    for (std::size_t j = 0; j < dc.edges.size(); ++j) {
        Index e = dc.edges[j];
        dc.half_edges.push_back(0.5 * g.edge_vectors[e]);
        dc.dual_faces.push_back(dual.dual_faces[e] + dual.face_stubs[eo + j]);
    }
    dc.third_faces.reserve(dc.faces.size());
    dc.dual_edges.reserve(dc.faces.size());
    for (std::size_t j = 0; j < dc.faces.size(); ++j) {
        Index f = dc.faces[j];
        dc.third_faces.push_back(g.face_vectors[f] / 3.0);
        dc.dual_edges.push_back(dual.dual_edges[f] + dual.edge_stubs[fo + j]);
    }
    return dc;
}

std::vector<IdentityResidual> check_identities(const TetMesh& mesh)
{
    const GeometricVectors g = geometric_vectors(mesh);
    const DualGeometry dual = build_dual_geometry(mesh, g);
    const Mat3 I = Mat3::Identity();

    Worst face_magic("face_magic"), edge_magic("edge_magic"), fundamental("fundamental_identity");
    Worst first_geom("first_geom"), second_geom("second_geom");
    Worst s_cancel("face_stub_cancellation"), l_cancel("edge_stub_cancellation");
    Worst face_int("dual_face_internal"), face_ext("dual_face_external");
    Worst edge_int("dual_edge_internal"), edge_ext("dual_edge_external");

    for (Index c = 0; c < mesh.num_cells(); ++c) {
        const CellDualVectors& dv = dual.cells[c];
        const auto at_cell = [c] { return "cell " + std::to_string(c); };
        Mat3 fm = Mat3::Zero(), em = Mat3::Zero();
        for (int i = 0; i < 4; ++i)
            fm += dv.dual_edges[i] * g.face_vectors[mesh.cell_faces(c)[i]].transpose();
        for (int k = 0; k < 6; ++k)
            em += dv.dual_faces[k] * g.edge_vectors[mesh.cell_edges(c)[k]].transpose();
        face_magic.update((fm - dv.volume * I).norm() / dv.volume, at_cell);
        edge_magic.update((em - dv.volume * I).norm() / dv.volume, at_cell);

        for (int a = 0; a < 4; ++a) {
            const auto at_corner = [c, a, &mesh] {
                return "cell " + std::to_string(c) + " node " + std::to_string(mesh.cell(c)[a]);
            };
            fundamental.update(
                fundamental_identity_residual(mesh, g, c, a).norm() / (3.0 * dv.volume), at_corner);
            const CornerPairing p = corner_pairing(mesh, g, c, a);
            for (int j = 0; j < 3; ++j) {
                int k = p.local_edges[j], i = p.local_faces[j], r = p.signs[j];
                const Vec3 f6 = (r / 6.0) * g.face_vectors[mesh.cell_faces(c)[i]];
                const Vec3 e4 = (r / 4.0) * g.edge_vectors[mesh.cell_edges(c)[k]];
                const Vec3 s = face_stub_from_triangles(mesh, g, dv, c, a, k);
                const Vec3 l = edge_stub_from_segment(mesh, g, c, a, i);
                first_geom.update((f6 - dv.dual_faces[k] - s).norm() / f6.norm(), at_corner);
                second_geom.update((e4 - dv.dual_edges[i] - l).norm() / e4.norm(), at_corner);
            }
        }
    }

    for (Index n = 0; n < mesh.num_nodes(); ++n) {
        const DualCellGeometry dc = dual_cell_geometry(mesh, g, dual, n);
        const auto at_node = [n] { return "node " + std::to_string(n); };
        Mat3 fs = Mat3::Zero(), es = Mat3::Zero();
        for (std::size_t j = 0; j < dc.edges.size(); ++j)
            fs += dc.half_edges[j] * dc.dual_faces[j].transpose();
        for (std::size_t j = 0; j < dc.faces.size(); ++j)
            es += dc.third_faces[j] * dc.dual_edges[j].transpose();
        const double rf = (fs - dc.volume * I).norm() / dc.volume;
        const double re = (es - dc.volume * I).norm() / dc.volume;
        (dc.boundary ? face_ext : face_int).update(rf, at_node);
        (dc.boundary ? edge_ext : edge_int).update(re, at_node);

        const auto eo = mesh.node_edges_offset(n);
        for (std::size_t j = 0; j < dc.edges.size(); ++j) {
            Index e = dc.edges[j];
            if (mesh.is_boundary_edge(e))
                continue;
            s_cancel.update(dual.face_stubs[eo + j].norm() / dual.dual_faces[e].norm(), [n, e] {
                return "node " + std::to_string(n) + " edge " + std::to_string(e);
            });
        }
        const auto fo = mesh.node_faces_offset(n);
        for (std::size_t j = 0; j < dc.faces.size(); ++j) {
            Index f = dc.faces[j];
            if (mesh.is_boundary_face(f))
                continue;
            l_cancel.update(dual.edge_stubs[fo + j].norm() / dual.dual_edges[f].norm(), [n, f] {
                return "node " + std::to_string(n) + " face " + std::to_string(f);
            });
        }
    }

    std::vector<IdentityResidual> out;
    for (Worst* w : {&face_magic, &edge_magic, &fundamental, &first_geom, &second_geom, &s_cancel,
                     &l_cancel, &face_int, &face_ext, &edge_int, &edge_ext})
        out.push_back(std::move(w->r));
    return out;
}

} // namespace dualhodge
