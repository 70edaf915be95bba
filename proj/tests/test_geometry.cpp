#include "tacsim/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

using namespace tacsim;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("tacsim_test_" + name);
}

// Brute-force edge -> triangle count.
std::map<std::pair<int, int>, int> edge_use(const SurfaceMesh& s) {
    std::map<std::pair<int, int>, int> use;
    for (const auto& t : s.triangles)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            ++use[{std::min(a, b), std::max(a, b)}];
        }
    return use;
}

} // namespace

TEST(GelPad, UnitCellCounts) {
    const TetMesh m = build_gel_pad(Vec3(1, 1, 1), {1, 1, 1});
    EXPECT_EQ(m.vertices.size(), 8u);
    EXPECT_EQ(m.tets.size(), 6u);
    EXPECT_EQ(m.dirichlet.size(), 4u);
    for (int v : m.dirichlet) EXPECT_DOUBLE_EQ(m.vertices[v].z(), 0.0);
}

TEST(GelPad, TwoCellCounts) {
    const TetMesh m = build_gel_pad(Vec3(2, 1, 1), {2, 1, 1});
    EXPECT_EQ(m.vertices.size(), 12u);
    EXPECT_EQ(m.tets.size(), 12u);
}

TEST(GelPad, PositiveVolumesAndRestData) {
    const TetMesh m = build_gel_pad(Vec3(0.016, 0.012, 0.004), {5, 4, 3});
    double total = 0.0;
    for (std::size_t e = 0; e < m.tets.size(); ++e) {
        const auto& t = m.tets[e];
        const double v = signed_tet_volume(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]], m.vertices[t[3]]);
        EXPECT_GT(v, 0.0);
        EXPECT_NEAR(m.rest_volumes[e], v, 1e-12 * v);
        Mat3 Dm;
        for (int k = 0; k < 3; ++k) Dm.col(k) = m.vertices[t[k + 1]] - m.vertices[t[0]];
        EXPECT_LT((m.inv_rest_shape[e] * Dm - Mat3::Identity()).norm(), 1e-9);
        total += v;
    }
    EXPECT_NEAR(total, 0.016 * 0.012 * 0.004, 1e-15);
}

TEST(GelPad, RejectsBadInput) {
    EXPECT_THROW(build_gel_pad(Vec3(1, 0, 1), {1, 1, 1}), InvalidArgument);
    EXPECT_THROW(build_gel_pad(Vec3(1, 1, 1), {1, 0, 1}), InvalidArgument);
    EXPECT_THROW(build_gel_pad(Vec3(1, -1, 1), {1, 1, 1}), InvalidArgument);
}

TEST(TetMeshCreate, ReorientsAndRejects) {
    std::vector<Vec3> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const TetMesh m = TetMesh::create(v, {{0, 2, 1, 3}});
    const auto& t = m.tets[0];
    EXPECT_GT(signed_tet_volume(v[t[0]], v[t[1]], v[t[2]], v[t[3]]), 0.0);
    EXPECT_THROW(TetMesh::create(v, {{0, 1, 2, 7}}), InvalidArgument);
    std::vector<Vec3> flat{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    EXPECT_THROW(TetMesh::create(flat, {{0, 1, 2, 3}}), InvalidArgument);
    EXPECT_THROW(TetMesh::create(v, {{0, 1, 2, 3}}, {9}), InvalidArgument);
}

TEST(Surface, SingleTet) {
    std::vector<Vec3> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const SurfaceMesh s = extract_surface(TetMesh::create(v, {{0, 1, 2, 3}}));
    EXPECT_EQ(s.triangles.size(), 4u);
    EXPECT_EQ(s.edges.size(), 6u);
}

TEST(Surface, UnitCellAndClosedness) {
    const SurfaceMesh s = extract_surface(build_gel_pad(Vec3(1, 1, 1), {1, 1, 1}));
    EXPECT_EQ(s.triangles.size(), 12u);
    const SurfaceMesh big = extract_surface(build_gel_pad(Vec3(3, 2, 1), {3, 2, 2}));
    for (const auto& [e, n] : edge_use(big)) EXPECT_EQ(n, 2);
    const long chi = static_cast<long>(big.vertices.size()) - static_cast<long>(big.edges.size()) +
                     static_cast<long>(big.triangles.size());
    EXPECT_EQ(chi, 2);
    EXPECT_EQ(big.edges.size(), edge_use(big).size());
    EXPECT_NO_THROW(require_watertight(big));
}

TEST(Surface, OutwardOrientation) {
    const SurfaceMesh s = extract_surface(build_gel_pad(Vec3(2, 2, 1), {2, 2, 1}));
    // Divergence theorem: sum of (centroid . n) * area / 3 = enclosed volume.
    double vol = 0.0;
    for (const auto& t : s.triangles) {
        const Vec3 a = s.vertices[t[0]], b = s.vertices[t[1]], c = s.vertices[t[2]];
        vol += a.dot(b.cross(c)) / 6.0;
    }
    EXPECT_NEAR(vol, 4.0, 1e-12);
}

TEST(Shells, IndentersAreWatertight) {
    for (const std::string shape : {"cube", "cylinder", "moon", "triangle"}) {
        const SurfaceMesh s = make_indenter(shape, 0.005, 0.004);
        EXPECT_NO_THROW(require_watertight(s)) << shape;
        double zmin = 1e9;
        for (const auto& v : s.vertices) zmin = std::min(zmin, v.z());
        EXPECT_NEAR(zmin, 0.0, 1e-15) << shape;
        // Interior point well inside the contact footprint.
        EXPECT_NEAR(winding_number(s, Vec3(shape == "moon" ? 0.0 : 0.0, shape == "moon" ? -0.0015 : 0.0, 0.002)), 1.0,
                    1e-6)
            << shape;
    }
    EXPECT_THROW(make_indenter("sphere", 0.005, 0.004), InvalidArgument);
}

TEST(Shells, OpenShellNamesEdge) {
    SurfaceMesh s = make_box_shell(1.0, 1.0);
    s.triangles.pop_back();
    s = SurfaceMesh::from_triangles(s.vertices, s.triangles);
    try {
        require_watertight(s);
        FAIL() << "expected InvalidArgument";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("edge"), std::string::npos);
    }
}

TEST(Sdf, SphereValues) {
    const double r = 0.01;
    const SurfaceMesh sphere = make_icosphere(r, 3);
    const SdfGrid g = build_sdf_grid(sphere, {32, 32, 32}, 0.01);
    EXPECT_NEAR(sdf_interpolate(g, Vec3::Zero()), -r, 2 * g.spacing);
    const Vec3 far(0.017, 0.0, 0.005);
    EXPECT_NEAR(sdf_interpolate(g, far), far.norm() - r, 2 * g.spacing);
    for (const auto& v : sphere.vertices) EXPECT_LE(std::abs(sdf_interpolate(g, v)), g.spacing);
}

TEST(Sdf, NodeIdentityAndGradient) {
    const SurfaceMesh sphere = make_icosphere(0.01, 3);
    const SdfGrid g = build_sdf_grid(sphere, {24, 24, 24}, 0.008);
    for (int k : {0, 5, 11, 23})
        EXPECT_DOUBLE_EQ(sdf_interpolate(g, g.node_position(3, k, 7)), static_cast<double>(g.at(3, k, 7)));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 30; ++i) {
        Vec3 dir(u(rng), u(rng), u(rng));
        dir.normalize();
        const Vec3 p = dir * 0.014;
        const SdfSample s = sdf_query(g, p);
        EXPECT_FALSE(s.clamped);
        EXPECT_LT(std::acos(std::clamp(s.n.dot(dir), -1.0, 1.0)), 5.0 * M_PI / 180.0);
        // Eikonal check on the raw central difference.
        const double hstep = g.spacing;
        Vec3 grad;
        for (int a = 0; a < 3; ++a) {
            Vec3 e = Vec3::Zero();
            e[a] = hstep;
            grad[a] = (sdf_interpolate(g, p + e) - sdf_interpolate(g, p - e)) / (2 * hstep);
        }
        EXPECT_NEAR(grad.norm(), 1.0, 0.1);
    }
}

TEST(Sdf, ClampedQuery) {
    const SdfGrid g = build_sdf_grid(make_icosphere(0.01, 2), {16, 16, 16}, 0.005);
    const Vec3 outside = g.upper() + Vec3(0.05, 0.0, 0.0);
    const Vec3 boundary(g.upper().x(), outside.y(), outside.z());
    const SdfSample s = sdf_query(g, outside);
    EXPECT_TRUE(s.clamped);
    EXPECT_DOUBLE_EQ(s.d, sdf_interpolate(g, boundary));
    EXPECT_FALSE(sdf_query(g, Vec3(0.012, 0, 0)).clamped);
}

TEST(Sdf, RejectsSmallGrid) {
    EXPECT_THROW(build_sdf_grid(make_icosphere(0.01, 1), {4, 16, 16}, 0.005), InvalidArgument);
}

TEST(Io, TetRoundTrip) {
    const TetMesh m = build_gel_pad(Vec3(0.01, 0.008, 0.003), {3, 2, 2});
    const auto p = temp_path("pad.tet");
    save_tet(m, p);
    const TetMesh r = load_tet(p);
    ASSERT_EQ(r.vertices.size(), m.vertices.size());
    ASSERT_EQ(r.tets, m.tets);
    for (std::size_t i = 0; i < m.vertices.size(); ++i) EXPECT_LT((r.vertices[i] - m.vertices[i]).norm(), 1e-15);
    const TetMesh mm = load_tet(p, 1e3);
    EXPECT_NEAR(mm.vertices.back().norm(), 1e3 * m.vertices.back().norm(), 1e-9);
    std::filesystem::remove(p);
}

TEST(Io, ObjAndSdfRoundTrip) {
    const SurfaceMesh s = make_cylinder_shell(0.0025, 0.004, 16);
    const auto po = temp_path("cyl.obj");
    save_obj(s, po);
    const SurfaceMesh r = load_obj(po);
    EXPECT_EQ(r.triangles, s.triangles);
    EXPECT_EQ(r.vertices.size(), s.vertices.size());
    const SdfGrid g = build_sdf_grid(s, {10, 10, 12}, 0.001);
    const auto ps = temp_path("cyl.sdf");
    save_sdf(g, ps);
    const SdfGrid h = load_sdf(ps);
    EXPECT_EQ(h.dims, g.dims);
    EXPECT_EQ(h.values, g.values);
    EXPECT_DOUBLE_EQ(h.spacing, g.spacing);
    std::filesystem::remove(po);
    std::filesystem::remove(ps);
}

TEST(Io, MalformedFiles) {
    const auto p = temp_path("bad.tet");
    {
        std::ofstream(p) << "tet 4 1\n0 0 0\n1 0 0\n";
    }
    EXPECT_THROW(load_tet(p), InvalidArgument);
    EXPECT_THROW(load_tet(temp_path("missing.tet")), InvalidArgument);
    std::filesystem::remove(p);
}
