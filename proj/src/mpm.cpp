#include "tacsim/baselines.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace tacsim {

namespace {

struct Stencil {
    std::array<int, 3> base;
    std::array<std::array<double, 3>, 3> w;  // [axis][node]
    std::array<std::array<double, 3>, 3> dw; // derivative in grid units
};

// Flattened 27-node weights, gradients (1/m) and grid indices of one particle.
struct Kernel {
    std::array<double, 27> w;
    std::array<Vec3, 27> gw;
    std::array<std::size_t, 27> node;
};

Stencil stencil(const MpmState& s, const Vec3& x) {
    Stencil st;
    const Vec3 q = (x - s.origin) / s.dx;
    for (int a = 0; a < 3; ++a) {
        const int b = static_cast<int>(std::floor(q[a] - 0.5));
        if (b < 0 || b + 2 >= s.dims[a])
            throw SolverError("mpm: particle left the grid along axis " + std::to_string(a));
        const double f = q[a] - b;
        st.base[a] = b;
        st.w[a] = {0.5 * (1.5 - f) * (1.5 - f), 0.75 - (f - 1.0) * (f - 1.0), 0.5 * (f - 0.5) * (f - 0.5)};
        st.dw[a] = {f - 1.5, -2.0 * (f - 1.0), f - 0.5};
    }
    return st;
}

Mat3 rotation_of(const Mat3& F) {
    // Scaled Newton iteration for the polar factor; SVD when F is inverted or
    // the iteration stalls.
    if (F.determinant() > 0) {
        Mat3 R = F;
        for (int it = 0; it < 20; ++it) {
            const Mat3 Rinv_t = R.inverse().transpose();
            const double g = std::cbrt(1.0 / std::abs(R.determinant()));
            const Mat3 next = 0.5 * (g * R + Rinv_t / g);
            const double diff = (next - R).cwiseAbs().maxCoeff();
            R = next;
            if (diff < 1e-14) return R;
        }
    }
    Eigen::JacobiSVD<Mat3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 U = svd.matrixU();
    const Mat3 V = svd.matrixV();
    if ((U * V.transpose()).determinant() < 0) U.col(2) *= -1.0;
    return U * V.transpose();
}

// First Piola-Kirchhoff stress of the fixed-corotated model.
Mat3 fixed_corotated_P(const Mat3& F, double mu, double lambda) {
    const Mat3 R = rotation_of(F);
    const double J = F.determinant();
    Mat3 P = 2.0 * mu * (F - R);
    if (J != 0.0) P += lambda * (J - 1.0) * J * F.inverse().transpose();
    return P;
}

Kernel kernel(const MpmState& s, const Vec3& x) {
    const Stencil st = stencil(s, x);
    const double inv_dx = 1.0 / s.dx;
    Kernel k;
    int n = 0;
    for (int c = 0; c < 3; ++c)
        for (int b = 0; b < 3; ++b)
            for (int a = 0; a < 3; ++a, ++n) {
                k.w[n] = st.w[0][a] * st.w[1][b] * st.w[2][c];
                k.gw[n] = inv_dx * Vec3(st.dw[0][a] * st.w[1][b] * st.w[2][c], st.w[0][a] * st.dw[1][b] * st.w[2][c],
                                        st.w[0][a] * st.w[1][b] * st.dw[2][c]);
                k.node[n] = s.grid_index(st.base[0] + a, st.base[1] + b, st.base[2] + c);
            }
    return k;
}

} // namespace

double mpm_max_dt(double dx, const Material& mat) {
    const double c = std::sqrt((mat.lame_lambda() + 2.0 * mat.lame_mu()) / mat.rho);
    return 0.3 * dx / c;
}

MpmState mpm_init(const Vec3& lo, const Vec3& hi, const Material& mat, const MpmConfig& cfg,
                  const std::vector<Vec3>& marker_rest, const Mat3& sensor_frame) {
    mat.validate();
    const Vec3 ext = hi - lo;
    if (!(ext.minCoeff() > 0)) throw InvalidArgument("mpm_init: empty pad box");
    if (cfg.ppc < 1) throw InvalidArgument("mpm_init: ppc must be >= 1");
    if (!(cfg.dx >= 0) || !(cfg.headroom >= 0) || !(cfg.damping >= 0))
        throw InvalidArgument("mpm_init: dx, headroom and damping must be >= 0");
    MpmState s;
    s.dx = cfg.dx > 0 ? cfg.dx : ext.z() / 8.0;
    const int margin = 3;
    s.origin = lo - Vec3::Constant(margin * s.dx);
    Vec3 top = hi + Vec3(0, 0, cfg.headroom) + Vec3::Constant(margin * s.dx);
    for (int a = 0; a < 3; ++a) s.dims[a] = static_cast<int>(std::ceil((top[a] - s.origin[a]) / s.dx - 1e-9)) + 1;
    s.fixed_layer = margin;
    s.sensor_frame = sensor_frame;

    std::array<int, 3> n{};
    Vec3 sp;
    for (int a = 0; a < 3; ++a) {
        n[a] = std::max(1, static_cast<int>(std::lround(ext[a] / s.dx))) * cfg.ppc;
        sp[a] = ext[a] / n[a];
    }
    const double vol = sp.prod();
    for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
            for (int i = 0; i < n[0]; ++i) {
                s.x.push_back(lo + Vec3((i + 0.5) * sp.x(), (j + 0.5) * sp.y(), (k + 0.5) * sp.z()));
                s.V.push_back(vol);
                s.m.push_back(mat.rho * vol);
            }
    for (const auto& m : marker_rest) {
        s.markers.push_back(static_cast<int>(s.x.size()));
        Vec3 p = m;
        p.z() = std::min(p.z(), hi.z());
        s.x.push_back(p);
        s.V.push_back(cfg.marker_mass_fraction * vol);
        s.m.push_back(cfg.marker_mass_fraction * mat.rho * vol);
    }
    s.x_rest = s.x;
    s.v.assign(s.x.size(), Vec3::Zero());
    s.F.assign(s.x.size(), Mat3::Identity());
    const std::size_t nodes = static_cast<std::size_t>(s.dims[0]) * s.dims[1] * s.dims[2];
    s.grid_m.assign(nodes, 0.0);
    s.grid_v.assign(nodes, Vec3::Zero());
    for (const auto& x : s.x) stencil(s, x);
    return s;
}

void mpm_step(MpmState& s, double dt, const Material& mat, const MpmCollider& col, double damping) {
    if (!(dt > 0) || dt > mpm_max_dt(s.dx, mat) * (1.0 + 1e-12))
        throw InvalidArgument("mpm_step: dt " + std::to_string(dt) + " violates the CFL bound " +
                              std::to_string(mpm_max_dt(s.dx, mat)));
    const double mu = mat.lame_mu(), lambda = mat.lame_lambda();
    std::fill(s.grid_m.begin(), s.grid_m.end(), 0.0);
    std::fill(s.grid_v.begin(), s.grid_v.end(), Vec3::Zero());
    std::vector<Vec3> force(s.grid_v.size(), Vec3::Zero());
    std::vector<Kernel> kernels(s.x.size());

    // P2G
    for (std::size_t p = 0; p < s.x.size(); ++p) {
        const Kernel& k = kernels[p] = kernel(s, s.x[p]);
        const Mat3 stress = s.V[p] * fixed_corotated_P(s.F[p], mu, lambda) * s.F[p].transpose();
        const Vec3 mom = s.m[p] * s.v[p];
        for (int n = 0; n < 27; ++n) {
            s.grid_m[k.node[n]] += k.w[n] * s.m[p];
            s.grid_v[k.node[n]] += k.w[n] * mom;
            force[k.node[n]] -= stress * k.gw[n];
        }
    }

    // grid update
    const double keep = 1.0 / (1.0 + damping * dt);
    const Mat3 Rt = col.pose.orientation.toRotationMatrix().transpose();
    const Vec3 lo = col.sdf ? col.sdf->origin : Vec3::Zero(), hi = col.sdf ? col.sdf->upper() : Vec3::Zero();
    for (int k = 0; k < s.dims[2]; ++k)
        for (int j = 0; j < s.dims[1]; ++j)
            for (int i = 0; i < s.dims[0]; ++i) {
                const std::size_t g = s.grid_index(i, j, k);
                if (s.grid_m[g] <= 0.0) continue;
                Vec3 v = (s.grid_v[g] + dt * force[g]) / s.grid_m[g] * keep;
                const bool wall = i < 2 || j < 2 || i >= s.dims[0] - 2 || j >= s.dims[1] - 2 || k >= s.dims[2] - 2;
                if (k <= s.fixed_layer || wall) {
                    v.setZero();
                } else if (col.sdf) {
                    const Vec3 p = s.origin + s.dx * Vec3(i, j, k);
                    const Vec3 r = p - col.pose.position;
                    const Vec3 b = Rt * r;
                    const bool in_box = (b.array() >= lo.array()).all() && (b.array() <= hi.array()).all();
                    if (in_box && sdf_interpolate(*col.sdf, b) < 0.0) v = col.linear + col.angular.cross(r);
                }
                s.grid_v[g] = v;
            }

    // G2P
    for (std::size_t p = 0; p < s.x.size(); ++p) {
        const Kernel& k = kernels[p];
        Vec3 v = Vec3::Zero();
        Mat3 gradv = Mat3::Zero();
        for (int n = 0; n < 27; ++n) {
            const Vec3& vi = s.grid_v[k.node[n]];
            v += k.w[n] * vi;
            gradv += vi * k.gw[n].transpose();
        }
        s.v[p] = v;
        s.F[p] = (Mat3::Identity() + dt * gradv) * s.F[p];
        s.x[p] += dt * v;
    }
    s.t += dt;
}

double mpm_grid_mass(const MpmState& s) {
    double m = 0.0;
    for (double v : s.grid_m) m += v;
    return m;
}

double mpm_particle_mass(const MpmState& s) {
    double m = 0.0;
    for (double v : s.m) m += v;
    return m;
}

bool mpm_explosion_guard(MpmState& s, double vmax) {
    if (!(vmax > 0)) throw InvalidArgument("mpm_explosion_guard: vmax must be positive");
    bool fire = false;
    for (const auto& v : s.v) {
        if (!(v.norm() <= vmax)) {
            fire = true;
            break;
        }
    }
    if (fire) std::fill(s.v.begin(), s.v.end(), Vec3::Zero());
    return fire;
}

MarkerField mpm_marker_field(const MpmState& s, const std::vector<int>& tracked) {
    MarkerField f;
    f.u.resize(tracked.size());
    for (std::size_t i = 0; i < tracked.size(); ++i) {
        const auto p = static_cast<std::size_t>(tracked[i]);
        if (p >= s.x.size()) throw InvalidArgument("mpm_marker_field: particle index out of range");
        f.u[i] = (s.sensor_frame * (s.x[p] - s.x_rest[p])).head<2>();
    }
    f.timestamp = s.t;
    return f;
}

} // namespace tacsim
