#include "tacsim/energy.hpp"
#include "tacsim/contact.hpp"

#include <cmath>

namespace tacsim {

void Material::validate() const {
    if (!(E > 0)) throw InvalidArgument("Material: E must be > 0");
    if (!(nu >= 0 && nu < 0.5)) throw InvalidArgument("Material: nu must be in [0, 0.5)");
    if (!(rho > 0)) throw InvalidArgument("Material: rho must be > 0");
    if (!(mu_f >= 0)) throw InvalidArgument("Material: mu_f must be >= 0");
}

void BarrierParams::validate() const {
    if (!(dhat > 0) || !(kappa > 0)) throw InvalidArgument("BarrierParams: dhat and kappa must be > 0");
}

void FrictionParams::validate() const {
    if (!(eps_v > 0)) throw InvalidArgument("FrictionParams: eps_v must be > 0");
    if (!(mu_f >= 0)) throw InvalidArgument("FrictionParams: mu_f must be >= 0");
}

EnergyReport& EnergyReport::operator+=(const EnergyReport& o) {
    value += o.value;
    gradient += o.gradient;
    diag_hessian += o.diag_hessian;
    for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i] += o.blocks[i];
    return *this;
}

EnergyReport& EnergyReport::operator*=(double s) {
    value *= s;
    gradient *= s;
    diag_hessian *= s;
    for (auto& b : blocks) b *= s;
    return *this;
}

VecX lumped_masses(const TetMesh& mesh, double rho) {
    VecX m = VecX::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const double q = 0.25 * rho * mesh.rest_volumes[e];
        for (int v : mesh.tets[e]) m[v] += q;
    }
    return m;
}

EnergyReport inertia_energy(const VecX& x, const VecX& xhat, const VecX& node_masses, double /*h*/) {
    const Eigen::Index n = x.size();
    EnergyReport r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = node_masses[i / 3];
        const double dx = x[i] - xhat[i];
        r.value += 0.5 * m * dx * dx;
        r.gradient[i] = m * dx;
        r.diag_hessian[i] = m;
        r.blocks[i / 3](i % 3, i % 3) = m;
    }
    return r;
}

double inertia_quadform(const VecX& node_masses, const VecX& p) {
    double q = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) q += node_masses[i / 3] * p[i] * p[i];
    return q;
}

// ---------------------------------------------------------------------------
// Stable Neo-Hookean: mu/2 (I_C - 3) - mu (J - 1) + (lambda + mu)/2 (J - 1)^2.
// The shifted Lame parameter reproduces linear elasticity at small strain.

namespace {

struct ElementKinematics {
    Mat3 F;
    Mat3 cof;  // dJ/dF
    double J;
    std::array<Vec3, 4> b;  // dF/dx_i = e_c b_i^T
};

ElementKinematics kinematics(const TetMesh& mesh, const VecX& x, std::size_t e) {
    const auto& t = mesh.tets[e];
    const Mat3& Bm = mesh.inv_rest_shape[e];
    ElementKinematics k;
    const Vec3 x0 = vertex(x, t[0]);
    Mat3 Ds;
    Ds.col(0) = vertex(x, t[1]) - x0;
    Ds.col(1) = vertex(x, t[2]) - x0;
    Ds.col(2) = vertex(x, t[3]) - x0;
    k.F = Ds * Bm;
    k.cof.col(0) = k.F.col(1).cross(k.F.col(2));
    k.cof.col(1) = k.F.col(2).cross(k.F.col(0));
    k.cof.col(2) = k.F.col(0).cross(k.F.col(1));
    k.J = k.F.col(0).dot(k.cof.col(0));
    k.b[1] = Bm.row(0).transpose();
    k.b[2] = Bm.row(1).transpose();
    k.b[3] = Bm.row(2).transpose();
    k.b[0] = -(k.b[1] + k.b[2] + k.b[3]);
    return k;
}

} // namespace

double stable_neo_hookean_density(const Mat3& F, double mu, double lambda) {
    const double ic = F.squaredNorm();
    const double J = F.determinant();
    return 0.5 * mu * (ic - 3.0) - mu * (J - 1.0) + 0.5 * (lambda + mu) * (J - 1.0) * (J - 1.0);
}

EnergyReport elastic_energy(const TetMesh& mesh, const VecX& x, const Material& mat, double h) {
    if (!x.allFinite()) throw SolverError("elastic_energy: non-finite positions");
    const double mu = mat.lame_mu();
    const double lam = mat.lame_lambda() + mu;
    const double h2 = h * h;
    EnergyReport r(x.size());
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const auto k = kinematics(mesh, x, e);
        const double V = mesh.rest_volumes[e] * h2;
        const double ic = k.F.squaredNorm();
        r.value += V * (0.5 * mu * (ic - 3.0) - mu * (k.J - 1.0) + 0.5 * lam * (k.J - 1.0) * (k.J - 1.0));
        const Mat3 P = mu * k.F + (lam * (k.J - 1.0) - mu) * k.cof;
        const auto& t = mesh.tets[e];
        for (int i = 0; i < 4; ++i) {
            r.gradient.segment<3>(3 * t[i]) += V * (P * k.b[i]);
            const Vec3 cb = k.cof * k.b[i];
            const Mat3 blk = V * (mu * k.b[i].squaredNorm() * Mat3::Identity() + lam * cb * cb.transpose());
            r.blocks[t[i]] += blk;
            r.diag_hessian.segment<3>(3 * t[i]) += blk.diagonal();
        }
    }
    return r;
}

double elastic_quadform(const TetMesh& mesh, const VecX& x, const Material& mat, double h, const VecX& p) {
    const double mu = mat.lame_mu();
    const double lam = mat.lame_lambda() + mu;
    double q = 0.0;
    for (std::size_t e = 0; e < mesh.tets.size(); ++e) {
        const auto& t = mesh.tets[e];
        const auto k = kinematics(mesh, x, e);
        Mat3 dF = Mat3::Zero();
        for (int i = 0; i < 4; ++i) dF += vertex(p, t[i]) * k.b[i].transpose();
        const double dj = (k.cof.array() * dF.array()).sum();
        const Vec3 &f0 = k.F.col(0), &f1 = k.F.col(1), &f2 = k.F.col(2);
        const Vec3 &d0 = dF.col(0), &d1 = dF.col(1), &d2 = dF.col(2);
        const double d2j = 2.0 * (d0.dot(d1.cross(f2)) + d0.dot(f1.cross(d2)) + f0.dot(d1.cross(d2)));
        q += mesh.rest_volumes[e] * (mu * dF.squaredNorm() + lam * dj * dj + (lam * (k.J - 1.0) - mu) * d2j);
    }
    return h * h * q;
}

// ---------------------------------------------------------------------------
// Contact barrier

ScalarJet barrier_term(double d, const BarrierParams& p) {
    if (!(d > 0)) throw FeasibilityError("barrier_term: non-positive contact distance " + std::to_string(d));
    ScalarJet j;
    if (d >= p.dhat) return j;
    const double dd = d - p.dhat;
    const double lg = std::log(d / p.dhat);
    j.value = -p.kappa * dd * dd * lg;
    j.d1 = -p.kappa * (2.0 * dd * lg + dd * dd / d);
    j.d2 = -p.kappa * (2.0 * lg + 4.0 * dd / d - dd * dd / (d * d));
    return j;
}

EnergyReport barrier_energy(const std::vector<ContactEval>& contacts, Eigen::Index n, const BarrierParams& p) {
    EnergyReport r(n);
    for (const auto& c : contacts) {
        if (c.cp.distance >= p.dhat) continue;
        const auto b = barrier_term(c.cp.distance, p);
        r.value += b.value;
        for (int i = 0; i < 4; ++i) {
            const double w = c.cp.weights[i];
            if (w == 0.0) continue;
            const Vec3 gd = w * c.cp.normal;
            r.gradient.segment<3>(3 * c.ids[i]) += b.d1 * gd;
            r.diag_hessian.segment<3>(3 * c.ids[i]) += b.d2 * gd.cwiseProduct(gd);
            r.blocks[c.ids[i]] += b.d2 * gd * gd.transpose();
        }
    }
    return r;
}

double barrier_quadform(const std::vector<ContactEval>& contacts, const VecX& x, const VecX& p,
                        const BarrierParams& bp) {
    double q = 0.0;
    for (const auto& c : contacts) {
        if (c.cp.distance >= bp.dhat) continue;
        std::array<Vec3, 4> v, dv;
        for (int i = 0; i < 4; ++i) {
            v[i] = vertex(x, c.ids[i]);
            dv[i] = vertex(p, c.ids[i]);
        }
        const auto jet = distance_jet(c.cp, v, dv);
        const auto b = barrier_term(c.cp.distance, bp);
        q += b.d2 * jet.d1 * jet.d1 + b.d1 * jet.d2;
    }
    return q;
}

// ---------------------------------------------------------------------------
// Friction

std::pair<double, double> friction_mollifier(double s, double eps_v) {
    if (s >= eps_v) return {s, 1.0};
    return {-s * s * s / (3.0 * eps_v * eps_v) + s * s / eps_v + eps_v / 3.0, -s * s / (eps_v * eps_v) + 2.0 * s / eps_v};
}

namespace {

// f'(s)/s and f''(s); both finite at s = 0.
std::pair<double, double> mollifier_curvatures(double s, double eps) {
    if (s >= eps) return {1.0 / s, 0.0};
    return {-s / (eps * eps) + 2.0 / eps, -2.0 * s / (eps * eps) + 2.0 / eps};
}

Vec3 relative_displacement(const ContactPair& c, const VecX& x, const VecX& x_t) {
    Vec3 dx = Vec3::Zero();
    for (int i = 0; i < 4; ++i) {
        if (c.anchor[i] != 0.0) dx += c.anchor[i] * (vertex(x, c.ids[i]) - vertex(x_t, c.ids[i]));
    }
    return dx;
}

} // namespace

EnergyReport friction_energy(const ContactSet& contacts, const VecX& x, const VecX& x_t, const FrictionParams& fp) {
    EnergyReport r(x.size());
    for (const auto& c : contacts.pairs) {
        const double scale = fp.mu_f * c.lambda_n;
        if (scale == 0.0) continue;
        const Vec2 u = c.T.transpose() * relative_displacement(c, x, x_t);
        const double s = u.norm();
        const double f = friction_mollifier(s, fp.eps_v).first;
        const auto [f1s, f2] = mollifier_curvatures(s, fp.eps_v);
        r.value += scale * f;
        const Vec2 uhat = s > 0 ? Vec2(u / s) : Vec2::Zero();
        // 2-D Hessian of f(|u|): f'' along u, f'/s across it.
        const Eigen::Matrix2d h2 = f2 * uhat * uhat.transpose() + f1s * (Eigen::Matrix2d::Identity() - uhat * uhat.transpose());
        const Mat3 tb = c.T * h2 * c.T.transpose();
        for (int i = 0; i < 4; ++i) {
            const double w = c.anchor[i];
            if (w == 0.0) continue;
            r.gradient.segment<3>(3 * c.ids[i]) += scale * f1s * w * (c.T * u);
            const Mat3 blk = scale * w * w * tb;
            r.blocks[c.ids[i]] += blk;
            r.diag_hessian.segment<3>(3 * c.ids[i]) += blk.diagonal();
        }
    }
    return r;
}

double friction_quadform(const ContactSet& contacts, const VecX& x, const VecX& x_t, const FrictionParams& fp,
                         const VecX& p) {
    double q = 0.0;
    for (const auto& c : contacts.pairs) {
        const double scale = fp.mu_f * c.lambda_n;
        if (scale == 0.0) continue;
        const Vec2 u = c.T.transpose() * relative_displacement(c, x, x_t);
        Vec3 dp = Vec3::Zero();
        for (int i = 0; i < 4; ++i) {
            if (c.anchor[i] != 0.0) dp += c.anchor[i] * vertex(p, c.ids[i]);
        }
        const Vec2 du = c.T.transpose() * dp;
        const double s = u.norm();
        const auto [f1s, f2] = mollifier_curvatures(s, fp.eps_v);
        if (s > 0) {
            const double along = u.dot(du) / s;
            q += scale * (f2 * along * along + f1s * (du.squaredNorm() - along * along));
        } else {
            q += scale * f1s * du.squaredNorm();
        }
    }
    return q;
}

} // namespace tacsim
