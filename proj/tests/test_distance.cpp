#include "tacsim/distance.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace tacsim;

namespace {

Vec3 rand_vec(std::mt19937_64& rng, double s = 1.0) {
    std::uniform_real_distribution<double> u(-s, s);
    return Vec3(u(rng), u(rng), u(rng));
}

// Brute force: dense barycentric sampling refined by local search.
double brute_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    double best = 1e300;
    const int n = 400;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; i + j <= n; ++j) {
            const double s = double(i) / n, t = double(j) / n;
            best = std::min(best, (p - (a + s * (b - a) + t * (c - a))).norm());
        }
    return best;
}

double brute_edge_edge(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
    double best = 1e300;
    const int n = 1000;
    for (int i = 0; i <= n; ++i) {
        const Vec3 p = a0 + (a1 - a0) * (double(i) / n);
        // exact point-segment distance for the inner loop
        const Vec3 d = b1 - b0;
        const double t = std::clamp((p - b0).dot(d) / d.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (p - (b0 + t * d)).norm());
    }
    return best;
}

Vec3 combine(const ClosestPoints& cp, const std::array<Vec3, 4>& v) {
    Vec3 r = Vec3::Zero();
    for (int i = 0; i < 4; ++i) r += cp.weights[i] * v[i];
    return r;
}

} // namespace

TEST(PointTriangle, PlaneDistance) {
    const Vec3 a(-1, -1, 0), b(1, -1, 0), c(0, 1, 0);
    const auto cp = point_triangle(Vec3(0, 0, 0.5), a, b, c);
    EXPECT_DOUBLE_EQ(cp.distance, 0.5);
    EXPECT_EQ(cp.active, 4);
    EXPECT_NEAR(cp.normal.z(), 1.0, 1e-15);
}

TEST(PointTriangle, MatchesBruteForce) {
    std::mt19937_64 rng(11);
    for (int it = 0; it < 200; ++it) {
        const Vec3 p = rand_vec(rng), a = rand_vec(rng), b = rand_vec(rng), c = rand_vec(rng);
        const auto cp = point_triangle(p, a, b, c);
        const double bf = brute_point_triangle(p, a, b, c);
        EXPECT_LE(cp.distance, bf + 1e-12);
        EXPECT_NEAR(cp.distance, bf, 2e-2 * std::max(bf, 1e-3));
        const Vec3 dv = combine(cp, {p, a, b, c});
        EXPECT_NEAR(dv.norm(), cp.distance, 1e-12);
        EXPECT_NEAR((dv - cp.distance * cp.normal).norm(), 0.0, 1e-12);
    }
}

TEST(EdgeEdge, PerpendicularSkew) {
    const double g = 0.3;
    const auto cp = edge_edge(Vec3(-1, 0, 0), Vec3(1, 0, 0), Vec3(0, -1, g), Vec3(0, 1, g));
    EXPECT_NEAR(cp.distance, g, 1e-15);
    EXPECT_EQ(cp.active, 4);
}

TEST(EdgeEdge, MatchesBruteForceIncludingParallel) {
    std::mt19937_64 rng(12);
    for (int it = 0; it < 200; ++it) {
        const Vec3 a0 = rand_vec(rng), a1 = rand_vec(rng), b0 = rand_vec(rng);
        Vec3 b1 = rand_vec(rng);
        if (it % 4 == 0) b1 = b0 + (a1 - a0) * 0.7; // parallel
        const auto cp = edge_edge(a0, a1, b0, b1);
        const double bf = brute_edge_edge(a0, a1, b0, b1);
        EXPECT_LE(cp.distance, bf + 1e-12);
        EXPECT_NEAR(cp.distance, bf, 5e-3 * std::max(bf, 1e-2));
        EXPECT_NEAR(combine(cp, {a0, a1, b0, b1}).norm(), cp.distance, 1e-12);
    }
}

TEST(EdgeEdge, ContinuousThroughParallel) {
    const Vec3 a0(0, 0, 0), a1(1, 0, 0), b0(-0.5, 0, 0.2), b1(0.5, 0, 0.2);
    const double d0 = edge_edge(a0, a1, b0, b1).distance;
    for (double e : {1e-12, 1e-9, 1e-6}) {
        EXPECT_NEAR(edge_edge(a0, a1, b0, b1 + Vec3(0, e, 0)).distance, d0, 10 * e + 1e-15);
        EXPECT_NEAR(edge_edge(a0, a1, b0, b1 + Vec3(0, 0, e)).distance, d0, 10 * e + 1e-15);
    }
}

TEST(DistanceJet, FiniteDifference) {
    std::mt19937_64 rng(13);
    int checked = 0;
    for (int it = 0; it < 100; ++it) {
        std::array<Vec3, 4> v{rand_vec(rng), rand_vec(rng), rand_vec(rng), rand_vec(rng)};
        std::array<Vec3, 4> dv{rand_vec(rng), rand_vec(rng), rand_vec(rng), rand_vec(rng)};
        const bool pt = it % 2 == 0;
        auto eval = [&](double t) {
            std::array<Vec3, 4> w;
            for (int i = 0; i < 4; ++i) w[i] = v[i] + t * dv[i];
            return pt ? point_triangle(w[0], w[1], w[2], w[3]) : edge_edge(w[0], w[1], w[2], w[3]);
        };
        const auto cp = eval(0.0);
        const double h = 1e-6;
        // Skip configurations whose closest feature changes inside the stencil.
        const auto cm = eval(-h), cpl = eval(h);
        if (cm.active != cp.active || cpl.active != cp.active) continue;
        const DistanceJet j = distance_jet(cp, v, dv);
        EXPECT_NEAR(j.d, cp.distance, 1e-14);
        const double fd1 = (cpl.distance - cm.distance) / (2 * h);
        const double fd2 = (cpl.distance - 2 * cp.distance + cm.distance) / (h * h);
        EXPECT_NEAR(j.d1, fd1, 1e-6 * std::max(1.0, std::abs(fd1)));
        EXPECT_NEAR(j.d2, fd2, 1e-3 * std::max(1.0, std::abs(fd2)));
        ++checked;
    }
    EXPECT_GT(checked, 50);
}
