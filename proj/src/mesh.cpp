#include "dualhodge/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace dualhodge {

namespace {

/// Number of inversions needed to sort three distinct values, mod 2.
int parity3(Index a, Index b, Index c)
{
    int inv = (a > b) + (a > c) + (b > c);
    return inv % 2 == 0 ? 1 : -1;
}

template <typename Key>
Index find_sorted(const std::vector<Key>& keys, const Key& k)
{
    auto it = std::lower_bound(keys.begin(), keys.end(), k);
    if (it == keys.end() || *it != k)
        return -1;
    return static_cast<Index>(it - keys.begin());
}

/// Counting-sort adjacency from (owner, item) pairs emitted in ascending item order.
template <typename Emit>
void build_adjacency(Index owners, Emit&& emit, std::vector<std::int64_t>& offsets,
                     std::vector<Index>& items)
{
    offsets.assign(static_cast<std::size_t>(owners) + 1, 0);
    emit([&](Index owner, Index) { ++offsets[owner + 1]; });
    for (Index i = 0; i < owners; ++i)
        offsets[i + 1] += offsets[i];
    items.resize(static_cast<std::size_t>(offsets.back()));
    std::vector<std::int64_t> next(offsets.begin(), offsets.end() - 1);
    emit([&](Index owner, Index item) { items[next[owner]++] = item; });
}

} // namespace

int local_edge_index(int a, int b)
{
    if (a > b)
        std::swap(a, b);
    for (int k = 0; k < 6; ++k)
        if (kLocalEdges[k][0] == a && kLocalEdges[k][1] == b)
            return k;
    throw Error(ErrorCode::InvalidArgument, "local_edge_index: nodes must be distinct and in 0..3");
}

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d)
{
    return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

int face_edge_sign(const std::array<Index, 3>& f, const std::array<Index, 2>& e)
{
    if (e[0] == f[0] && e[1] == f[1])
        return 1;
    if (e[0] == f[1] && e[1] == f[2])
        return 1;
    if (e[0] == f[0] && e[1] == f[2])
        return -1;
    return 0;
}

int cell_face_incidence(const TetMesh& mesh, Index c, Index f)
{
    const auto& faces = mesh.cell_faces(c);
    for (int i = 0; i < 4; ++i)
        if (faces[i] == f)
            return mesh.cell_face_sign(c, i);
    return 0;
}

TetMesh TetMesh::build(std::vector<Vec3> nodes, std::vector<std::array<Index, 4>> cells,
                       std::vector<int> cell_tags, std::span<const TaggedTriangle> boundary_tags)
{
    if (cells.empty())
        throw Error(ErrorCode::InvalidArgument, "mesh has no tetrahedra");
    if (!cell_tags.empty() && cell_tags.size() != cells.size())
        throw Error(ErrorCode::InvalidArgument, "cell tag count does not match cell count");
    if (cell_tags.empty())
        cell_tags.assign(cells.size(), 0);

    TetMesh m;
    const auto num_nodes = static_cast<Index>(nodes.size());
    Vec3 lo = Vec3::Constant(INFINITY), hi = Vec3::Constant(-INFINITY);
    for (const Vec3& p : nodes) {
        if (!p.allFinite())
            throw Error(ErrorCode::InvalidArgument, "non-finite node coordinate");
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& cell = cells[c];
        for (Index n : cell)
            if (n < 0 || n >= num_nodes)
                throw Error(ErrorCode::InvalidArgument,
                            "cell " + std::to_string(c) + " references node " + std::to_string(n) +
                                " outside 0.." + std::to_string(num_nodes - 1));
        std::array<Index, 4> s = cell;
        std::sort(s.begin(), s.end());
        if (std::adjacent_find(s.begin(), s.end()) != s.end())
            throw DegenerateCellError(static_cast<Index>(c),
                                      "cell " + std::to_string(c) + " repeats a node");
    }
    m.extent_ = (hi - lo).maxCoeff();
    const double vol_tol = 1e-14 * m.extent_ * m.extent_ * m.extent_;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& cell = cells[c];
        double v = signed_volume(nodes[cell[0]], nodes[cell[1]], nodes[cell[2]], nodes[cell[3]]);
        if (!(std::abs(v) >= vol_tol) || v == 0.0) {
            char msg[96];
            std::snprintf(msg, sizeof msg, "cell %zu is degenerate (volume %.3g)", c, v);
            throw DegenerateCellError(static_cast<Index>(c), msg);
        }
        if (v < 0)
            std::swap(cell[2], cell[3]);
    }

    const auto num_cells = static_cast<Index>(cells.size());
    m.nodes_ = std::move(nodes);
    m.cells_ = std::move(cells);
    m.cell_tags_ = std::move(cell_tags);

    m.edges_.reserve(m.cells_.size() * 6);
    m.faces_.reserve(m.cells_.size() * 4);
    for (const auto& cell : m.cells_) {
        for (const auto& le : kLocalEdges) {
            Index a = cell[le[0]], b = cell[le[1]];
            m.edges_.push_back({std::min(a, b), std::max(a, b)});
        }
        for (const auto& lf : kLocalFaces) {
            std::array<Index, 3> f{cell[lf[0]], cell[lf[1]], cell[lf[2]]};
            std::sort(f.begin(), f.end());
            m.faces_.push_back(f);
        }
    }
    std::sort(m.edges_.begin(), m.edges_.end());
    m.edges_.erase(std::unique(m.edges_.begin(), m.edges_.end()), m.edges_.end());
    m.edges_.shrink_to_fit();
    std::sort(m.faces_.begin(), m.faces_.end());
    m.faces_.erase(std::unique(m.faces_.begin(), m.faces_.end()), m.faces_.end());
    m.faces_.shrink_to_fit();

    m.cell_edges_.resize(m.cells_.size());
    m.cell_edge_signs_.resize(m.cells_.size());
    m.cell_faces_.resize(m.cells_.size());
    m.cell_face_signs_.resize(m.cells_.size());
    m.face_cells_.assign(m.faces_.size(), {-1, -1});
    for (Index c = 0; c < num_cells; ++c) {
        const auto& cell = m.cells_[c];
        for (int k = 0; k < 6; ++k) {
            Index a = cell[kLocalEdges[k][0]], b = cell[kLocalEdges[k][1]];
            m.cell_edges_[c][k] = m.find_edge(a, b);
            m.cell_edge_signs_[c][k] = static_cast<std::int8_t>(a < b ? 1 : -1);
        }
        for (int i = 0; i < 4; ++i) {
            const auto& lf = kLocalFaces[i];
            Index a = cell[lf[0]], b = cell[lf[1]], d = cell[lf[2]];
            Index f = m.find_face(a, b, d);
            m.cell_faces_[c][i] = f;
            // With positive cell volume, the local triple of face i is outward for even i.
            int local = (i % 2 == 0) ? 1 : -1;
            m.cell_face_signs_[c][i] = static_cast<std::int8_t>(local * parity3(a, b, d));
            auto& fc = m.face_cells_[f];
            if (fc[0] < 0)
                fc[0] = c;
            else if (fc[1] < 0)
                fc[1] = c;
            else
                throw Error(ErrorCode::InvalidArgument,
                            "face shared by more than two cells (cell " + std::to_string(c) + ")");
        }
    }

    m.boundary_node_.assign(m.nodes_.size(), 0);
    m.boundary_edge_.assign(m.edges_.size(), 0);
    for (Index f = 0; f < m.num_faces(); ++f) {
        if (m.face_cells_[f][1] >= 0)
            continue;
        m.boundary_faces_.push_back(f);
        const auto& fn = m.faces_[f];
        for (Index n : fn)
            m.boundary_node_[n] = 1;
        m.boundary_edge_[m.find_edge(fn[0], fn[1])] = 1;
        m.boundary_edge_[m.find_edge(fn[1], fn[2])] = 1;
        m.boundary_edge_[m.find_edge(fn[0], fn[2])] = 1;
    }

    m.face_tags_.assign(m.faces_.size(), 0);
    for (const auto& t : boundary_tags) {
        for (Index n : t.nodes)
            if (n < 0 || n >= m.num_nodes())
                throw Error(ErrorCode::Parse, "boundary triangle references a missing node");
        Index f = m.find_face(t.nodes[0], t.nodes[1], t.nodes[2]);
        if (f < 0)
            throw Error(ErrorCode::Parse, "boundary triangle (" + std::to_string(t.nodes[0] + 1) +
                                              " " + std::to_string(t.nodes[1] + 1) + " " +
                                              std::to_string(t.nodes[2] + 1) +
                                              ") is not a face of the mesh");
        if (m.is_boundary_face(f))
            m.face_tags_[f] = t.tag;
    }

    build_adjacency(m.num_nodes(), [&](auto&& put) {
        for (Index c = 0; c < num_cells; ++c)
            for (Index n : m.cells_[c])
                put(n, c);
    }, m.node_cells_.offsets, m.node_cells_.items);
    build_adjacency(m.num_nodes(), [&](auto&& put) {
        for (Index e = 0; e < m.num_edges(); ++e)
            for (Index n : m.edges_[e])
                put(n, e);
    }, m.node_edges_.offsets, m.node_edges_.items);
    build_adjacency(m.num_nodes(), [&](auto&& put) {
        for (Index f = 0; f < m.num_faces(); ++f)
            for (Index n : m.faces_[f])
                put(n, f);
    }, m.node_faces_.offsets, m.node_faces_.items);
    build_adjacency(m.num_edges(), [&](auto&& put) {
        for (Index c = 0; c < num_cells; ++c)
            for (Index e : m.cell_edges_[c])
                put(e, c);
    }, m.edge_cells_.offsets, m.edge_cells_.items);
    build_adjacency(m.num_edges(), [&](auto&& put) {
        for (Index f = 0; f < m.num_faces(); ++f) {
            const auto& fn = m.faces_[f];
            put(m.find_edge(fn[0], fn[1]), f);
            put(m.find_edge(fn[1], fn[2]), f);
            put(m.find_edge(fn[0], fn[2]), f);
        }
    }, m.edge_faces_.offsets, m.edge_faces_.items);
    return m;
}

Index TetMesh::find_edge(Index a, Index b) const
{
    std::array<Index, 2> k{std::min(a, b), std::max(a, b)};
    return find_sorted(edges_, k);
}

Index TetMesh::find_face(Index a, Index b, Index c) const
{
    std::array<Index, 3> k{a, b, c};
    std::sort(k.begin(), k.end());
    return find_sorted(faces_, k);
}

IncidenceMatrices build_incidence(const TetMesh& mesh)
{
    IncidenceMatrices inc;
    TripletBuilder<int> g(mesh.num_edges(), mesh.num_nodes());
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        g.add(e, mesh.edge(e)[0], -1);
        g.add(e, mesh.edge(e)[1], 1);
    }
    inc.G = g.build();

    TripletBuilder<int> c(mesh.num_faces(), mesh.num_edges());
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const auto& fn = mesh.face(f);
        c.add(f, mesh.find_edge(fn[0], fn[1]), 1);
        c.add(f, mesh.find_edge(fn[1], fn[2]), 1);
        c.add(f, mesh.find_edge(fn[0], fn[2]), -1);
    }
    inc.C = c.build();

    TripletBuilder<int> d(mesh.num_cells(), mesh.num_faces());
    for (Index k = 0; k < mesh.num_cells(); ++k)
        for (int i = 0; i < 4; ++i)
            d.add(k, mesh.cell_faces(k)[i], mesh.cell_face_sign(k, i));
    inc.D = d.build();
    return inc;
}

GeometricVectors geometric_vectors(const TetMesh& mesh)
{
    GeometricVectors g;
    g.edge_vectors.resize(mesh.num_edges());
    g.edge_barycenters.resize(mesh.num_edges());
    g.edge_lengths.resize(mesh.num_edges());
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        const Vec3& a = mesh.node(mesh.edge(e)[0]);
        const Vec3& b = mesh.node(mesh.edge(e)[1]);
        g.edge_vectors[e] = b - a;
        g.edge_barycenters[e] = 0.5 * (a + b);
        g.edge_lengths[e] = (b - a).norm();
    }
    g.face_vectors.resize(mesh.num_faces());
    g.face_barycenters.resize(mesh.num_faces());
    g.face_areas.resize(mesh.num_faces());
    for (Index f = 0; f < mesh.num_faces(); ++f) {
        const auto& fn = mesh.face(f);
        const Vec3& a = mesh.node(fn[0]);
        const Vec3& b = mesh.node(fn[1]);
        const Vec3& c = mesh.node(fn[2]);
        g.face_vectors[f] = 0.5 * (b - a).cross(c - a);
        g.face_barycenters[f] = (a + b + c) / 3.0;
        g.face_areas[f] = g.face_vectors[f].norm();
    }
    g.cell_barycenters.resize(mesh.num_cells());
    g.cell_volumes.resize(mesh.num_cells());
    for (Index k = 0; k < mesh.num_cells(); ++k) {
        const auto& cn = mesh.cell(k);
        const Vec3& a = mesh.node(cn[0]);
        const Vec3& b = mesh.node(cn[1]);
        const Vec3& c = mesh.node(cn[2]);
        const Vec3& d = mesh.node(cn[3]);
        g.cell_barycenters[k] = (a + b + c + d) / 4.0;
        g.cell_volumes[k] = signed_volume(a, b, c, d);
    }
    return g;
}

} // namespace dualhodge
