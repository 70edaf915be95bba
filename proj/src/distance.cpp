#include "tacsim/distance.hpp"

#include <algorithm>
#include <cmath>

namespace tacsim {

namespace {

void finish(ClosestPoints& cp, const Vec3& delta) {
    cp.distance = delta.norm();
    cp.normal = cp.distance > 0 ? Vec3(delta / cp.distance) : Vec3::Zero();
    cp.active = 0;
    for (double w : cp.weights) cp.active += (w != 0.0);
}

} // namespace

// Region-based closest point on a triangle (Ericson, Real-Time Collision
// Detection, 5.1.5). Vertex and edge regions produce exact zero weights.
ClosestPoints point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    ClosestPoints cp;
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    double u = 1, v = 0, w = 0;  // barycentric on a, b, c
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    const Vec3 cpv = p - c;
    const double d5 = ab.dot(cpv), d6 = ac.dot(cpv);
    const double vc = d1 * d4 - d3 * d2;
    const double vb = d5 * d2 - d1 * d6;
    const double va = d3 * d6 - d5 * d4;
    if (d1 <= 0 && d2 <= 0) {
        u = 1, v = 0, w = 0;
    } else if (d3 >= 0 && d4 <= d3) {
        u = 0, v = 1, w = 0;
    } else if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        double t = d1 / (d1 - d3);
        u = 1 - t, v = t, w = 0;
    } else if (d6 >= 0 && d5 <= d6) {
        u = 0, v = 0, w = 1;
    } else if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        double t = d2 / (d2 - d6);
        u = 1 - t, v = 0, w = t;
    } else if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        u = 0, v = 1 - t, w = t;
    } else {
        double denom = 1.0 / (va + vb + vc);
        v = vb * denom;
        w = vc * denom;
        u = 1 - v - w;
    }
    cp.weights = {1.0, -u, -v, -w};
    finish(cp, p - (u * a + v * b + w * c));
    return cp;
}

// Closest points of two segments (Ericson, 5.1.9), including the parallel case.
ClosestPoints edge_edge(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
    ClosestPoints cp;
    const Vec3 d1 = a1 - a0, d2 = b1 - b0, r = a0 - b0;
    const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
    double s = 0, t = 0;
    const double eps = 1e-300;
    if (a <= eps && e <= eps) {
        s = t = 0;
    } else if (a <= eps) {
        s = 0;
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= eps) {
            t = 0;
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            // Nearly parallel segments fall back to an endpoint of A.
            s = denom > 1e-14 * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0) {
                t = 0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1) {
                t = 1;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    cp.weights = {1 - s, s, -(1 - t), -t};
    finish(cp, (a0 + s * d1) - (b0 + t * d2));
    return cp;
}

namespace {

// d(t) = |N(t) . r(t)| / |N(t)| with N quadratic and r linear in t.
DistanceJet plane_jet(const Vec3& e1, const Vec3& de1, const Vec3& e2, const Vec3& de2, const Vec3& r,
                      const Vec3& dr) {
    const Vec3 N0 = e1.cross(e2);
    const Vec3 N1 = e1.cross(de2) + de1.cross(e2);
    const Vec3 N2 = de1.cross(de2);
    const double n0 = N0.dot(r), n1 = N1.dot(r) + N0.dot(dr), n2 = N2.dot(r) + N1.dot(dr);
    const double q0 = N0.dot(N0), q1 = 2 * N0.dot(N1), q2 = N1.dot(N1) + 2 * N0.dot(N2);
    const double sq = std::sqrt(q0);
    const double sgn = n0 >= 0 ? 1.0 : -1.0;
    DistanceJet j;
    j.d = sgn * n0 / sq;
    j.d1 = sgn * (n1 / sq - 0.5 * n0 * q1 / (q0 * sq));
    j.d2 = sgn * (2 * n2 / sq - n1 * q1 / (q0 * sq) - n0 * q2 / (q0 * sq) + 0.75 * n0 * q1 * q1 / (q0 * q0 * sq));
    return j;
}

DistanceJet from_squared(double g0, double g1, double g2) {
    DistanceJet j;
    j.d = std::sqrt(g0);
    j.d1 = g1 / (2 * j.d);
    j.d2 = g2 / (2 * j.d) - g1 * g1 / (4 * g0 * j.d);
    return j;
}

DistanceJet point_point_jet(const Vec3& r, const Vec3& dr) {
    return from_squared(r.squaredNorm(), 2 * r.dot(dr), 2 * dr.squaredNorm());
}

// Distance from x to the line through (a, b).
DistanceJet point_line_jet(const Vec3& x, const Vec3& dx, const Vec3& a, const Vec3& da, const Vec3& b,
                           const Vec3& db) {
    const Vec3 r = x - a, dr = dx - da, e = b - a, de = db - da;
    const Vec3 c0 = r.cross(e), c1 = r.cross(de) + dr.cross(e), c2 = dr.cross(de);
    const double A0 = c0.dot(c0), A1 = 2 * c0.dot(c1), A2 = c1.dot(c1) + 2 * c0.dot(c2);
    const double B0 = e.dot(e), B1 = 2 * e.dot(de), B2 = de.dot(de);
    const double g0 = A0 / B0;
    const double g1 = (A1 * B0 - A0 * B1) / (B0 * B0);
    const double g2 = 2 * A2 / B0 - 2 * A1 * B1 / (B0 * B0) - 2 * A0 * B2 / (B0 * B0) +
                      2 * A0 * B1 * B1 / (B0 * B0 * B0);
    return from_squared(g0, g1, g2);
}

} // namespace

DistanceJet distance_jet(const ClosestPoints& cp, const std::array<Vec3, 4>& v, const std::array<Vec3, 4>& dv) {
    // Side A is vertex 0 for point-triangle (weights[0] == 1) or vertices 0..1
    // for edge-edge; side B carries the negative weights.
    std::array<int, 4> ia{}, ib{};
    int na = 0, nb = 0;
    for (int i = 0; i < 4; ++i) {
        if (cp.weights[i] > 0) ia[na++] = i;
        else if (cp.weights[i] < 0) ib[nb++] = i;
    }
    if (na == 1 && nb == 1) return point_point_jet(v[ia[0]] - v[ib[0]], dv[ia[0]] - dv[ib[0]]);
    if (na == 1 && nb == 2) return point_line_jet(v[ia[0]], dv[ia[0]], v[ib[0]], dv[ib[0]], v[ib[1]], dv[ib[1]]);
    if (na == 2 && nb == 1) return point_line_jet(v[ib[0]], dv[ib[0]], v[ia[0]], dv[ia[0]], v[ia[1]], dv[ia[1]]);
    if (na == 1 && nb == 3) {
        return plane_jet(v[ib[1]] - v[ib[0]], dv[ib[1]] - dv[ib[0]], v[ib[2]] - v[ib[0]], dv[ib[2]] - dv[ib[0]],
                         v[ia[0]] - v[ib[0]], dv[ia[0]] - dv[ib[0]]);
    }
    if (na == 2 && nb == 2) {
        const Vec3 ea = v[ia[1]] - v[ia[0]], eb = v[ib[1]] - v[ib[0]];
        if (ea.cross(eb).squaredNorm() > 1e-12 * ea.squaredNorm() * eb.squaredNorm()) {
            return plane_jet(ea, dv[ia[1]] - dv[ia[0]], eb, dv[ib[1]] - dv[ib[0]], v[ia[0]] - v[ib[0]],
                             dv[ia[0]] - dv[ib[0]]);
        }
        return point_line_jet(v[ia[0]], dv[ia[0]], v[ib[0]], dv[ib[0]], v[ib[1]], dv[ib[1]]);
    }
    // Degenerate primitives: first-order information only.
    DistanceJet j;
    j.d = cp.distance;
    for (int i = 0; i < 4; ++i) j.d1 += cp.weights[i] * cp.normal.dot(dv[i]);
    return j;
}

} // namespace tacsim
