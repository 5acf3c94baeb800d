#include <random>
#include <set>

#include <gtest/gtest.h>

#include "dualhodge/benchmark.hpp"
#include "dualhodge/dualgeom.hpp"
#include "oracles.hpp"

using namespace dualhodge;

namespace {

TetMesh reference_tet()
{
    return TetMesh::build({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}, {{0, 1, 2, 3}});
}

TetMesh jittered_box(int level, std::uint64_t seed)
{
    BenchmarkSpec s;
    s.level = level;
    s.jitter = 0.2;
    s.seed = seed;
    return generate_mesh(s);
}

} // namespace

TEST(DualGeom, ReferenceTetHandValues)
{
    const TetMesh m = reference_tet();
    const GeometricVectors g = geometric_vectors(m);
    const CellDualVectors dv = cell_dual_vectors(m, g, 0);
    EXPECT_DOUBLE_EQ(dv.volume, 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(dv.corner_volume(), 1.0 / 24.0);
    // Dual face of edge (0,1): half of (b_c − b_e) × (b_f{0,1,3} − b_f{0,1,2}).
    EXPECT_TRUE(dv.dual_faces[0].isApprox(Vec3(1.0 / 12, 1.0 / 24, 1.0 / 24), 1e-15));
    // Dual edge of the slanted face {1,2,3}: b_f − b_c, outward.
    EXPECT_TRUE(dv.dual_edges[0].isApprox(Vec3(1.0 / 12, 1.0 / 12, 1.0 / 12), 1e-15));
    // Dual edge of face {0,1,2} (normal +z, pointing into the cell): −(b_f − b_c).
    EXPECT_EQ(m.cell_face_sign(0, 3), -1);
    EXPECT_TRUE(dv.dual_edges[3].isApprox(Vec3(-1.0 / 12, -1.0 / 12, 0.25), 1e-15));
    const DualGeometry dual = build_dual_geometry(m, g);
    for (double v : dual.dual_volumes)
        EXPECT_DOUBLE_EQ(v, 1.0 / 24.0);
}

TEST(DualGeom, DualVectorsPairWithPrimalOrientation)
{
    const TetMesh m = jittered_box(2, 3);
    const GeometricVectors g = geometric_vectors(m);
    const DualGeometry dual = build_dual_geometry(m, g);
    for (Index e = 0; e < m.num_edges(); ++e)
        EXPECT_GT(dual.dual_faces[e].dot(g.edge_vectors[e]), 0.0);
    for (Index f = 0; f < m.num_faces(); ++f)
        EXPECT_GT(dual.dual_edges[f].dot(g.face_vectors[f]), 0.0);
    for (Index c = 0; c < m.num_cells(); ++c)
        for (int i = 0; i < 4; ++i) {
            const Index f = m.cell_faces(c)[i];
            const Vec3 expected = m.cell_face_sign(c, i) * (g.face_barycenters[f] - g.cell_barycenters[c]);
            EXPECT_TRUE(dual.cells[c].dual_edges[i].isApprox(expected, 1e-14));
        }
}

TEST(DualGeom, CornerPairingSignsMatchGeometry)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        const TetMesh m = oracle::random_tet_mesh(rng);
        const GeometricVectors g = geometric_vectors(m);
        for (int a = 0; a < 4; ++a) {
            const CornerPairing p = corner_pairing(m, g, 0, a);
            std::set<int> edges, faces;
            for (int j = 0; j < 3; ++j) {
                const Vec3& e = g.edge_vectors[m.cell_edges(0)[p.local_edges[j]]];
                const Vec3& f = g.face_vectors[m.cell_faces(0)[p.local_faces[j]]];
                EXPECT_GT(p.signs[j] * f.dot(e), 0.0);
                edges.insert(p.local_edges[j]);
                faces.insert(p.local_faces[j]);
                EXPECT_NE(p.local_faces[j], a);
                const auto [u, v] = kLocalEdges[p.local_edges[j]];
                EXPECT_TRUE(u == a || v == a);
            }
            EXPECT_EQ(edges.size(), 3u);
            EXPECT_EQ(faces.size(), 3u);
            const Mat3 r = fundamental_identity_residual(m, g, 0, a);
            EXPECT_LT(r.norm(), 1e-13 * g.cell_volumes[0]);
        }
    }
}

TEST(DualGeom, StubsAgreeWithDirectGeometricConstructions)
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 100; ++t) {
        const TetMesh m = oracle::random_tet_mesh(rng);
        const GeometricVectors g = geometric_vectors(m);
        const CellDualVectors dv = cell_dual_vectors(m, g, 0);
        const double scale = std::cbrt(dv.volume);
        for (int a = 0; a < 4; ++a) {
            const CornerStubs s = corner_stubs(m, g, dv, 0, a);
            for (int j = 0; j < 3; ++j) {
                const Vec3 tri = face_stub_from_triangles(m, g, dv, 0, a, s.pairing.local_edges[j]);
                const Vec3 seg = edge_stub_from_segment(m, g, 0, a, s.pairing.local_faces[j]);
                EXPECT_LT((tri - s.face_stubs[j]).norm(), 1e-13 * scale * scale);
                EXPECT_LT((seg - s.edge_stubs[j]).norm(), 1e-13 * scale);
            }
        }
    }
}

TEST(DualGeom, InteriorDualCellsCloseWithoutStubs)
{
    const TetMesh m = jittered_box(3, 6);
    const GeometricVectors g = geometric_vectors(m);
    const DualGeometry dual = build_dual_geometry(m, g);
    int interior = 0;
    for (Index n = 0; n < m.num_nodes(); ++n) {
        const DualCellGeometry dc = dual_cell_geometry(m, g, dual, n);
        EXPECT_EQ(dc.boundary, m.is_boundary_node(n));
        ASSERT_EQ(dc.half_edges.size(), dc.edges.size());
        ASSERT_EQ(dc.dual_edges.size(), dc.faces.size());
        Mat3 sum_e = Mat3::Zero(), sum_f = Mat3::Zero();
        for (std::size_t j = 0; j < dc.edges.size(); ++j)
            sum_e += dc.half_edges[j] * dc.dual_faces[j].transpose();
        for (std::size_t j = 0; j < dc.faces.size(); ++j)
            sum_f += dc.third_faces[j] * dc.dual_edges[j].transpose();
        EXPECT_LT((sum_e - dc.volume * Mat3::Identity()).norm(), 1e-13 * dc.volume);
        EXPECT_LT((sum_f - dc.volume * Mat3::Identity()).norm(), 1e-13 * dc.volume);
        if (dc.boundary)
            continue;
        ++interior;
        // Without boundary, the stubs cancel and the dual vectors are the plain ones.
        for (std::size_t j = 0; j < dc.edges.size(); ++j)
            EXPECT_LT((dc.dual_faces[j] - dual.dual_faces[dc.edges[j]]).norm(), 1e-14);
        for (std::size_t j = 0; j < dc.faces.size(); ++j)
            EXPECT_LT((dc.dual_edges[j] - dual.dual_edges[dc.faces[j]]).norm(), 1e-14);
    }
    EXPECT_EQ(interior, 8);
}

TEST(DualGeom, IdentitySuiteOnRandomAndGeneratedMeshes)
{
    std::mt19937_64 rng(99);
    for (int t = 0; t < 200; ++t)
        for (const auto& r : check_identities(oracle::random_tet_mesh(rng)))
            EXPECT_LT(r.worst, 1e-12) << r.name << " at " << r.location;
    const auto results = check_identities(jittered_box(3, 2));
    std::set<std::string> names;
    for (const auto& r : results) {
        names.insert(r.name);
        EXPECT_GT(r.checked, 0) << r.name;
        EXPECT_LT(r.worst, 1e-12) << r.name << " at " << r.location;
    }
    EXPECT_EQ(names.size(), results.size());
    for (const char* required : {"face_magic", "edge_magic", "fundamental_identity", "first_geom",
                                 "second_geom", "dual_face_internal", "dual_face_external",
                                 "dual_edge_internal", "dual_edge_external"})
        EXPECT_TRUE(names.count(required)) << required;
}

TEST(DualGeom, BarycentricFactsHold)
{
    std::mt19937_64 rng(12);
    oracle::BarycentricReport worst;
    for (int t = 0; t < 50; ++t)
        worst.merge(oracle::barycentric_facts(oracle::random_tet_mesh(rng)));
    worst.merge(oracle::barycentric_facts(jittered_box(3, 1)));
    EXPECT_LT(worst.corner_volume, 1e-13);
    EXPECT_LT(worst.half_edge, 1e-13);
    EXPECT_LT(worst.third_face, 1e-13);
    EXPECT_LT(worst.total_volume, 1e-13);
}
