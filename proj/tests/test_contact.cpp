#include "tacsim/contact.hpp"
#include "tacsim/scene.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace tacsim;

namespace {

struct Pair {
    TetMesh gel;
    SurfaceMesh gel_surface;
    SurfaceMesh shell;
    VecX x;

    CollisionMesh a() const { return {&gel_surface, 0, 0}; }
    CollisionMesh b() const { return {&shell, static_cast<int>(gel.vertices.size()), 1}; }
};

Pair make_pair(const Quat& q, const Vec3& t) {
    Pair p;
    PadSpec pad;
    pad.extent = Vec3(0.004, 0.004, 0.001);
    pad.resolution = {5, 5, 1};
    p.gel = build_pad(pad);
    p.gel_surface = extract_surface(p.gel);
    p.shell = make_indenter("cube", 0.0022, 0.002);
    const std::size_t ng = p.gel.vertices.size();
    p.x.resize(3 * static_cast<Eigen::Index>(ng + p.shell.vertices.size()));
    for (std::size_t i = 0; i < ng; ++i) p.x.segment<3>(3 * static_cast<Eigen::Index>(i)) = p.gel.vertices[i];
    for (std::size_t i = 0; i < p.shell.vertices.size(); ++i)
        p.x.segment<3>(3 * static_cast<Eigen::Index>(ng + i)) = q * p.shell.vertices[i] + t;
    return p;
}

// Every primitive pair, evaluated exactly.
std::vector<std::pair<Candidate, double>> all_pairs(const Pair& p) {
    std::vector<std::pair<Candidate, double>> out;
    const CollisionMesh ma = p.a(), mb = p.b();
    auto add = [&](Candidate c) { out.emplace_back(c, evaluate_candidate(c, ma, mb, p.x).cp.distance); };
    for (int v = 0; v < static_cast<int>(p.gel_surface.vertices.size()); ++v)
        for (int t = 0; t < static_cast<int>(p.shell.triangles.size()); ++t) add({ContactKind::PointTriangle, 0, v, t});
    for (int v = 0; v < static_cast<int>(p.shell.vertices.size()); ++v)
        for (int t = 0; t < static_cast<int>(p.gel_surface.triangles.size()); ++t)
            add({ContactKind::PointTriangle, 1, v, t});
    for (int e = 0; e < static_cast<int>(p.gel_surface.edges.size()); ++e)
        for (int f = 0; f < static_cast<int>(p.shell.edges.size()); ++f) add({ContactKind::EdgeEdge, 0, e, f});
    return out;
}

} // namespace

TEST(BroadPhase, EmptyWhenSeparated) {
    const Pair p = make_pair(Quat::Identity(), Vec3(0, 0, 0.001));
    EXPECT_TRUE(broad_phase(p.a(), p.b(), p.x, 1e-4).empty());
    EXPECT_EQ(min_distance(broad_phase(p.a(), p.b(), p.x, 1e-4), p.a(), p.b(), p.x),
              std::numeric_limits<double>::infinity());
}

TEST(BroadPhase, SupersetOfBruteForce) {
    const Quat q(Eigen::AngleAxisd(0.2, Vec3(1, 0.5, 0.3).normalized()));
    const Pair p = make_pair(q, Vec3(1e-4, -2e-4, 4e-4));
    const double r = 3e-4;
    const auto cands = broad_phase(p.a(), p.b(), p.x, r);
    ASSERT_TRUE(std::is_sorted(cands.begin(), cands.end()));
    const std::set<Candidate> cs(cands.begin(), cands.end());
    EXPECT_EQ(cs.size(), cands.size());
    int close = 0;
    for (const auto& [c, d] : all_pairs(p)) {
        if (d < r) {
            ++close;
            EXPECT_TRUE(cs.count(c)) << int(c.kind) << " " << c.point_side << " " << c.first << " " << c.second;
        }
    }
    EXPECT_GT(close, 0);
}

TEST(NarrowPhase, MatchesBruteForce) {
    const Quat q(Eigen::AngleAxisd(0.15, Vec3(0.3, 1, 0.2).normalized()));
    const Pair p = make_pair(q, Vec3(-1e-4, 1e-4, 3e-4));
    const double dhat = 3e-4;
    const ContactSet set = narrow_phase(broad_phase(p.a(), p.b(), p.x, dhat), p.a(), p.b(), p.x, dhat);

    std::map<std::pair<int, int>, double> pt_min; // (side, vertex) -> min distance
    int ee = 0;
    double dmin = 1e9;
    for (const auto& [c, d] : all_pairs(p)) {
        dmin = std::min(dmin, d);
        if (d >= dhat) continue;
        if (c.kind == ContactKind::EdgeEdge) {
            ++ee;
        } else {
            auto key = std::make_pair(c.point_side, c.first);
            auto it = pt_min.find(key);
            if (it == pt_min.end() || d < it->second) pt_min[key] = d;
        }
    }
    int npt = 0, nee = 0;
    for (const auto& c : set.pairs) {
        EXPECT_LT(c.d, dhat);
        EXPECT_GT(c.d, 0.0);
        EXPECT_NEAR(c.normal.norm(), 1.0, 1e-12);
        if (c.kind == ContactKind::EdgeEdge) {
            ++nee;
        } else {
            ++npt;
        }
    }
    EXPECT_EQ(npt, static_cast<int>(pt_min.size()));
    EXPECT_EQ(nee, ee);
    EXPECT_GT(npt + nee, 0);
    double set_min = 1e9;
    for (const auto& c : set.pairs) set_min = std::min(set_min, c.d);
    EXPECT_NEAR(set_min, dmin, 1e-15);
}

TEST(NarrowPhase, FlatFaceAtHalfDhat) {
    const double dhat = 1e-4;
    const Pair p = make_pair(Quat::Identity(), Vec3(0, 0, 0.5 * dhat));
    const auto cands = broad_phase(p.a(), p.b(), p.x, dhat);
    EXPECT_NEAR(min_distance(cands, p.a(), p.b(), p.x), 0.5 * dhat, 1e-15);
    const ContactSet set = narrow_phase(cands, p.a(), p.b(), p.x, dhat);
    ASSERT_FALSE(set.pairs.empty());
    for (const auto& c : set.pairs) {
        EXPECT_NEAR(c.d, 0.5 * dhat, 1e-15);
        EXPECT_NEAR(std::abs(c.normal.z()), 1.0, 1e-12);
    }
    EXPECT_FALSE(surfaces_intersect(p.a(), p.b(), p.x));
    const Pair deep = make_pair(Quat::Identity(), Vec3(0, 0, -2e-4));
    EXPECT_TRUE(surfaces_intersect(deep.a(), deep.b(), deep.x));
}

TEST(FrictionAnchors, ForcesAndBasis) {
    const BarrierParams bp{1e-4, 1e5};
    ContactSet set;
    set.dhat = bp.dhat;
    for (double t : {0.1, 0.3, 0.6, 0.9, 1.0}) {
        ContactPair c;
        c.d = t * bp.dhat;
        c.normal = Vec3(0.2, -0.4, 1.0).normalized();
        set.pairs.push_back(c);
    }
    const ContactSet f = build_friction_anchors(set, VecX::Zero(12), bp);
    for (std::size_t i = 0; i < f.pairs.size(); ++i) {
        const auto& c = f.pairs[i];
        EXPECT_GE(c.lambda_n, 0.0);
        if (i > 0) EXPECT_LT(c.lambda_n, f.pairs[i - 1].lambda_n);
        EXPECT_LT((c.T.transpose() * c.T - Eigen::Matrix2d::Identity()).norm(), 1e-12);
        EXPECT_LT((c.T.transpose() * c.normal).norm(), 1e-12);
    }
    EXPECT_DOUBLE_EQ(f.pairs.back().lambda_n, 0.0);
    for (const Vec3 n : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, -1, 0)}) {
        const Mat32 T = tangent_basis(n);
        EXPECT_LT((T.transpose() * T - Eigen::Matrix2d::Identity()).norm(), 1e-12);
        EXPECT_LT((T.transpose() * n).norm(), 1e-12);
    }
}
