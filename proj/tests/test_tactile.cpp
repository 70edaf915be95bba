#include "tacsim/scene.hpp"
#include "tacsim/tactile.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace tacsim;

namespace {

MarkerField random_field(std::mt19937_64& rng, int id) {
    std::normal_distribution<double> nd(0.0, 1e-4);
    MarkerField f;
    for (auto& u : f.u) u = Vec2(nd(rng), nd(rng));
    f.frame_id = id;
    return f;
}

} // namespace

TEST(Markers, LatticeOnTopFace) {
    PadSpec spec;
    const TetMesh pad = build_pad(spec);
    const MarkerMapping m = init_marker_mapping(extract_surface(pad), pad.vertices);
    ASSERT_EQ(m.marker_rest.size(), static_cast<std::size_t>(kMarkerCount));
    for (std::size_t i = 0; i < m.neighbors.size(); ++i) {
        EXPECT_NEAR(m.marker_rest[i].z(), 0.0, 1e-15);
        ASSERT_FALSE(m.weights[i].empty());
        double s = 0.0;
        for (double w : m.weights[i]) {
            EXPECT_GE(w, 0.0);
            s += w;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
        for (int n : m.neighbors[i]) EXPECT_NEAR(pad.vertices[static_cast<std::size_t>(n)].z(), 0.0, 1e-15);
    }
    // Row-major with columns along the long (x) axis; inset from the face.
    EXPECT_LT(m.marker_rest[0].x(), m.marker_rest[1].x());
    EXPECT_LT(m.marker_rest[0].y(), m.marker_rest[kMarkerCols].y());
    EXPECT_GT(m.marker_rest[0].x(), -0.008);
    EXPECT_LT(m.marker_rest.back().x(), 0.008);
}

TEST(Markers, ExactHitAndEquidistant) {
    const std::vector<Vec3> rest{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    const auto hit = map_markers({Vec3(1, 0, 0)}, {0, 1, 2, 3}, rest, 3, Mat3::Identity());
    EXPECT_EQ(hit.neighbors[0], std::vector<int>{1});
    EXPECT_EQ(hit.weights[0], std::vector<double>{1.0});
    const auto k1 = map_markers({Vec3(0.1, 0.2, 0)}, {0, 1, 2, 3}, rest, 1, Mat3::Identity());
    EXPECT_EQ(k1.neighbors[0], std::vector<int>{0});
    EXPECT_DOUBLE_EQ(k1.weights[0][0], 1.0);
    const auto mid = map_markers({Vec3(0.5, 0, 0)}, {0, 1}, rest, 2, Mat3::Identity());
    ASSERT_EQ(mid.weights[0].size(), 2u);
    EXPECT_DOUBLE_EQ(mid.weights[0][0], 0.5);
    EXPECT_DOUBLE_EQ(mid.weights[0][1], 0.5);
    // (0.5, 0.5) is equidistant from all four nodes: k = 2 keeps every tied node.
    const auto tied = map_markers({Vec3(0.5, 0.5, 0)}, {3, 2, 1, 0}, rest, 2, Mat3::Identity());
    ASSERT_EQ(tied.neighbors[0].size(), 4u);
    for (double w : tied.weights[0]) EXPECT_DOUBLE_EQ(w, 0.25);
    EXPECT_THROW(map_markers({Vec3::Zero()}, {0}, rest, 2, Mat3::Identity()), InvalidArgument);
    EXPECT_THROW(map_markers({Vec3::Zero()}, {0, 1}, rest, 0, Mat3::Identity()), InvalidArgument);
}

TEST(Markers, RigidTranslationProjects) {
    PadSpec spec;
    spec.extent = Vec3(0.008, 0.006, 0.002);
    spec.resolution = {4, 3, 1};
    const TetMesh pad = build_pad(spec);
    const MarkerMapping m = init_marker_mapping(extract_surface(pad), pad.vertices);
    const VecX rest = flatten(pad.vertices);
    const Vec3 t(1e-4, -2e-4, 3e-4);
    VecX x = rest;
    for (Eigen::Index i = 0; i < x.size() / 3; ++i) x.segment<3>(3 * i) += t;
    const MarkerField f = marker_displacements(m, x, rest);
    const auto un = marker_normal_displacements(m, x, rest);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        EXPECT_NEAR(f.u[i].x(), t.x(), 1e-15);
        EXPECT_NEAR(f.u[i].y(), t.y(), 1e-15);
        EXPECT_NEAR(un[i], t.z(), 1e-15);
    }
    EXPECT_NEAR(f.max_norm(), t.head<2>().norm(), 1e-15);
    EXPECT_EQ(marker_displacements(m, rest, rest).max_norm(), 0.0);
}

TEST(Metrics, MseExamples) {
    MarkerField a, b;
    b.u[5] = Vec2(3, 4);
    EXPECT_DOUBLE_EQ(frame_sq_error(a, b), 25.0);
    EXPECT_DOUBLE_EQ(field_mse(FieldSequence{a, a}, FieldSequence{a, b}), 12.5);
    EXPECT_DOUBLE_EQ(field_mse(std::vector<FieldSequence>{{a}, {b}}, std::vector<FieldSequence>{{b}, {b}}), 12.5);
    EXPECT_THROW(field_mse(FieldSequence{a}, FieldSequence{a, b}), InvalidArgument);
    EXPECT_DOUBLE_EQ(field_cosine(b, b), 1.0);
    EXPECT_DOUBLE_EQ(field_cosine(a, b), 0.0);
    MarkerField c = b;
    c.u[5] = -c.u[5];
    EXPECT_DOUBLE_EQ(field_cosine(b, c), -1.0);
}

TEST(Metrics, ClosestFrameMatchFindsShift) {
    std::mt19937_64 rng(9);
    FieldSequence sim;
    for (int i = 0; i < 10; ++i) sim.push_back(random_field(rng, i));
    FieldSequence real(sim.begin() + 2, sim.end());
    const FrameMatch fm = closest_frame_match(sim, real);
    ASSERT_EQ(fm.pairing.size(), 8u);
    for (int j = 0; j < 8; ++j) EXPECT_EQ(fm.pairing[static_cast<std::size_t>(j)], j + 2);
    EXPECT_DOUBLE_EQ(fm.mse, 0.0);
    // Ties go to the earliest frame.
    const FrameMatch tie = closest_frame_match(FieldSequence{sim[0], sim[0]}, FieldSequence{sim[0]});
    EXPECT_EQ(tie.pairing[0], 0);
}

TEST(Csv, RoundTrip) {
    std::mt19937_64 rng(10);
    FieldSequence seq;
    for (int i : {1, 2, 5}) seq.push_back(random_field(rng, i));
    for (const auto model : {std::optional<std::string>{}, std::optional<std::string>{"ipc"}}) {
        std::stringstream ss;
        write_field_csv(ss, seq, model);
        const FieldSequence r = read_field_csv(ss);
        ASSERT_EQ(r.size(), seq.size());
        for (std::size_t k = 0; k < seq.size(); ++k) {
            EXPECT_EQ(r[k].frame_id, seq[k].frame_id);
            for (std::size_t i = 0; i < seq[k].u.size(); ++i)
                EXPECT_LT((r[k].u[i] - seq[k].u[i]).norm(), 1e-8 * 1e-4);
        }
    }
    std::stringstream bad("frame,row,col,ux,uy\n0,9,0,1,1\n");
    EXPECT_THROW(read_field_csv(bad), InvalidArgument);
    std::stringstream hdr("nope\n");
    EXPECT_THROW(read_field_csv(hdr), InvalidArgument);
}
