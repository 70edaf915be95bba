#include "tacsim/contact.hpp"
#include "tacsim/energy.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace tacsim;

namespace {

VecX random_vec(std::mt19937_64& rng, Eigen::Index n, double s) {
    std::uniform_real_distribution<double> u(-s, s);
    VecX v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

// Central-difference check of a gradient along random directions.
template <class F>
void check_gradient(F energy, const VecX& x, const VecX& grad, double h, double tol, std::mt19937_64& rng) {
    for (int k = 0; k < 5; ++k) {
        VecX dir = random_vec(rng, x.size(), 1.0);
        dir.normalize();
        const double fd = (energy(x + h * dir) - energy(x - h * dir)) / (2 * h);
        const double an = grad.dot(dir);
        EXPECT_NEAR(an, fd, tol * std::max(1.0, std::abs(fd)));
    }
}

std::vector<ContactEval> point_contact(const VecX& x) {
    ContactEval c;
    c.ids = {0, 1, 2, 3};
    c.cp = point_triangle(x.segment<3>(0), x.segment<3>(3), x.segment<3>(6), x.segment<3>(9));
    return {c};
}

} // namespace

TEST(Material, LameParameters) {
    Material m;
    m.E = 5e4;
    m.nu = 0.45;
    EXPECT_NEAR(m.lame_mu(), 5e4 / 2.9, 1e-9);
    EXPECT_NEAR(m.lame_lambda(), 5e4 * 0.45 / (1.45 * 0.1), 1e-6);
    m.nu = 0.5;
    EXPECT_THROW(m.validate(), InvalidArgument);
}

TEST(Inertia, ValuesAndGradient) {
    const VecX m = VecX::Constant(2, 2.0);
    VecX xhat = VecX::Zero(6), x = VecX::Zero(6);
    EXPECT_DOUBLE_EQ(inertia_energy(x, xhat, m, 5e-3).value, 0.0);
    x[0] = 1.0;
    const auto r = inertia_energy(x, xhat, m, 5e-3);
    EXPECT_DOUBLE_EQ(r.value, 1.0);
    EXPECT_DOUBLE_EQ(r.gradient[0], 2.0);
    EXPECT_DOUBLE_EQ(r.gradient.tail(5).norm(), 0.0);

    std::mt19937_64 rng(1);
    const VecX masses = random_vec(rng, 4, 1.0).cwiseAbs().array() + 0.1;
    const VecX xh = random_vec(rng, 12, 1.0), y = random_vec(rng, 12, 1.0);
    check_gradient([&](const VecX& z) { return inertia_energy(z, xh, masses, 1e-2).value; }, y,
                   inertia_energy(y, xh, masses, 1e-2).gradient, 1e-5, 1e-8, rng);
}

TEST(Elastic, RestAndRotationInvariance) {
    const TetMesh mesh = build_gel_pad(Vec3(0.004, 0.003, 0.002), {2, 2, 1});
    Material mat;
    const VecX x0 = flatten(mesh.vertices);
    const auto r0 = elastic_energy(mesh, x0, mat, 5e-3);
    EXPECT_NEAR(r0.value, 0.0, 1e-18);
    EXPECT_LT(r0.gradient.norm(), 1e-12);

    const Mat3 R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    std::mt19937_64 rng(2);
    const VecX y = x0 + random_vec(rng, x0.size(), 2e-4);
    VecX yr(y.size());
    for (Eigen::Index i = 0; i < y.size() / 3; ++i) yr.segment<3>(3 * i) = R * y.segment<3>(3 * i) + Vec3(1, 2, 3);
    const double e = elastic_energy(mesh, y, mat, 5e-3).value;
    EXPECT_GT(e, 0.0);
    EXPECT_NEAR(elastic_energy(mesh, yr, mat, 5e-3).value, e, 1e-9 * e);
}

TEST(Elastic, FiniteDifference) {
    const TetMesh mesh = build_gel_pad(Vec3(0.004, 0.003, 0.002), {2, 1, 1});
    Material mat;
    const double h = 5e-3;
    std::mt19937_64 rng(3);
    const VecX x = flatten(mesh.vertices) + random_vec(rng, 3 * static_cast<Eigen::Index>(mesh.vertices.size()), 3e-4);
    const auto r = elastic_energy(mesh, x, mat, h);
    auto f = [&](const VecX& z) { return elastic_energy(mesh, z, mat, h).value; };
    // Relative error of the directional derivative.
    for (int k = 0; k < 5; ++k) {
        VecX dir = random_vec(rng, x.size(), 1.0);
        dir.normalize();
        const double eps = 1e-8;
        const double fd = (f(x + eps * dir) - f(x - eps * dir)) / (2 * eps);
        EXPECT_LT(std::abs(r.gradient.dot(dir) - fd), 1e-4 * std::abs(fd));
        // Quadratic form against the gradient difference.
        const double q = elastic_quadform(mesh, x, mat, h, dir);
        const double fdq =
            (elastic_energy(mesh, x + eps * dir, mat, h).gradient - elastic_energy(mesh, x - eps * dir, mat, h).gradient)
                .dot(dir) /
            (2 * eps);
        EXPECT_LT(std::abs(q - fdq), 1e-4 * std::abs(fdq));
    }
}

TEST(Elastic, InvertedElementIsFinite) {
    std::vector<Vec3> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const TetMesh mesh = TetMesh::create(v, {{0, 1, 2, 3}});
    VecX x = flatten(v);
    x[11] = -1.0; // push the apex through the base
    const auto r = elastic_energy(mesh, x, Material{}, 1.0);
    EXPECT_TRUE(std::isfinite(r.value));
    EXPECT_GT(r.value, 0.0);
}

TEST(Barrier, Values) {
    BarrierParams p{1.0, 3.0};
    EXPECT_DOUBLE_EQ(barrier_term(1.0, p).value, 0.0);
    EXPECT_DOUBLE_EQ(barrier_term(1.5, p).value, 0.0);
    EXPECT_NEAR(barrier_term(0.5, p).value, 0.25 * std::log(2.0) * 3.0, 1e-15);
    BarrierParams q{1e-4, 1e5};
    EXPECT_GT(barrier_term(1e-12, q).value, barrier_term(1e-8, q).value);
    double prev = std::numeric_limits<double>::infinity();
    for (double t = 0.01; t < 1.0; t += 0.01) {
        const double v = barrier_term(t * q.dhat, q).value;
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_THROW(barrier_term(0.0, q), FeasibilityError);
    EXPECT_THROW(barrier_term(-1e-6, q), FeasibilityError);
}

TEST(Barrier, ScalarDerivatives) {
    BarrierParams p{1e-4, 1e5};
    for (double t : {0.05, 0.3, 0.7, 0.99}) {
        const double d = t * p.dhat, h = 1e-10;
        const auto j = barrier_term(d, p);
        const double fd1 = (barrier_term(d + h, p).value - barrier_term(d - h, p).value) / (2 * h);
        const double fd2 = (barrier_term(d + h, p).d1 - barrier_term(d - h, p).d1) / (2 * h);
        EXPECT_NEAR(j.d1, fd1, 1e-6 * std::abs(fd1));
        EXPECT_NEAR(j.d2, fd2, 1e-6 * std::abs(fd2));
    }
}

TEST(Barrier, EnergyFiniteDifference) {
    BarrierParams p{1.0, 1.0};
    // Point above a triangle interior at 0.3 dhat, then a random perturbation.
    std::vector<Vec3> v{{0.1, 0.2, 0.3}, {-1, -1, 0}, {1, -1, 0}, {0, 1.5, 0}};
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 4; ++trial) {
        const VecX x = flatten(v) + random_vec(rng, 12, 0.02);
        const auto c = point_contact(x);
        ASSERT_LT(c[0].cp.distance, p.dhat);
        const auto r = barrier_energy(c, 12, p);
        auto f = [&](const VecX& z) { return barrier_energy(point_contact(z), 12, p).value; };
        check_gradient(f, x, r.gradient, 1e-6, 1e-6, rng);
        VecX dir = random_vec(rng, 12, 1.0);
        const double h = 1e-6;
        const double fdq = (barrier_energy(point_contact(x + h * dir), 12, p).gradient -
                            barrier_energy(point_contact(x - h * dir), 12, p).gradient)
                               .dot(dir) /
                           (2 * h);
        EXPECT_NEAR(barrier_quadform(c, x, dir, p), fdq, 1e-5 * std::max(1.0, std::abs(fdq)));
        for (const auto& b : r.blocks) EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat3>(b).eigenvalues().minCoeff(), -1e-12);
    }
}

TEST(Mollifier, Anchors) {
    const double eps = 1e-5;
    EXPECT_DOUBLE_EQ(friction_mollifier(0.0, eps).first, eps / 3.0);
    EXPECT_DOUBLE_EQ(friction_mollifier(0.0, eps).second, 0.0);
    const auto below = friction_mollifier(eps * (1 - 1e-12), eps), at = friction_mollifier(eps, eps);
    EXPECT_NEAR(below.first, at.first, 1e-10 * eps);
    EXPECT_NEAR(below.second, at.second, 1e-10);
    EXPECT_DOUBLE_EQ(friction_mollifier(2 * eps, eps).first, 2 * eps);
    EXPECT_DOUBLE_EQ(friction_mollifier(2 * eps, eps).second, 1.0);
    for (double s = 0.0; s < 2 * eps; s += eps / 50) EXPECT_GE(friction_mollifier(s, eps).first, s - 1e-20);
}

namespace {

ContactSet one_friction_pair(double lambda, const Vec3& n) {
    ContactSet set;
    ContactPair c;
    c.ids = {0, 1, 2, 3};
    c.anchor = {1.0, -0.2, -0.5, -0.3};
    c.lambda_n = lambda;
    c.normal = n;
    c.T = tangent_basis(n);
    set.pairs.push_back(c);
    return set;
}

} // namespace

TEST(Friction, ZeroSlideAndLinearBranch) {
    FrictionParams fp{1e-3, 0.8};
    const ContactSet set = one_friction_pair(2.5, Vec3(0, 0, 1));
    const VecX xt = VecX::Zero(12);
    EXPECT_NEAR(friction_energy(set, xt, xt, fp).value, 0.8 * 2.5 * 1e-3 / 3.0, 1e-15);
    EXPECT_LT(friction_energy(set, xt, xt, fp).gradient.norm(), 1e-15);
    VecX x = xt;
    x[0] = 0.01; // point slides 10 eps_v along x
    x[2] = 0.5;  // normal motion is ignored
    EXPECT_NEAR(friction_energy(set, x, xt, fp).value, 0.8 * 2.5 * 0.01, 1e-14);
}

TEST(Friction, FiniteDifference) {
    FrictionParams fp{1e-3, 0.6};
    const ContactSet set = one_friction_pair(1.7, Vec3(0.3, -0.2, 1).normalized());
    std::mt19937_64 rng(5);
    const VecX xt = random_vec(rng, 12, 1.0);
    for (double scale : {2e-4, 5e-3}) { // quadratic and linear branches
        const VecX x = xt + random_vec(rng, 12, scale);
        const auto r = friction_energy(set, x, xt, fp);
        auto f = [&](const VecX& z) { return friction_energy(set, z, xt, fp).value; };
        check_gradient(f, x, r.gradient, 1e-8, 1e-5, rng);
        VecX dir = random_vec(rng, 12, 1.0);
        const double h = 1e-8;
        const double fdq =
            (friction_energy(set, x + h * dir, xt, fp).gradient - friction_energy(set, x - h * dir, xt, fp).gradient)
                .dot(dir) /
            (2 * h);
        EXPECT_NEAR(friction_quadform(set, x, xt, fp, dir), fdq, 1e-4 * std::max(1.0, std::abs(fdq)));
    }
}

TEST(Energy, LumpedMassesSumToTotal) {
    const TetMesh mesh = build_gel_pad(Vec3(0.016, 0.012, 0.004), {4, 3, 2});
    const VecX m = lumped_masses(mesh, 1000.0);
    EXPECT_NEAR(m.sum(), 1000.0 * 0.016 * 0.012 * 0.004, 1e-15);
    EXPECT_GT(m.minCoeff(), 0.0);
}
