#include "tacsim/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace tacsim {

void PenaltyTactileParams::validate() const {
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!ok(k_n) || !ok(k_d) || !ok(k_t) || !ok(mu) || !ok(kv_kappa) || !ok(kv_c))
        throw InvalidArgument("penalty params: all coefficients must be finite and >= 0");
}

TactilePointSet make_tactile_points(const MarkerMapping& map) {
    TactilePointSet ps;
    ps.points = map.marker_rest;
    ps.sensor_frame = map.sensor_frame;
    ps.f_n.assign(ps.points.size(), Vec3::Zero());
    ps.f_t.assign(ps.points.size(), Vec3::Zero());
    ps.skipped.assign(ps.points.size(), 0);
    return ps;
}

TactilePointSet penalty_tactile(TactilePointSet ps, const SdfGrid& sdf, const RigidPose& rel_pose,
                                const Twist& rel_vel, const PenaltyTactileParams& prm) {
    prm.validate();
    const Mat3 R = rel_pose.orientation.toRotationMatrix();
    const Vec3 lin = rel_vel.head<3>(), ang = rel_vel.tail<3>();
    const std::size_t n = ps.points.size();
    ps.f_n.assign(n, Vec3::Zero());
    ps.f_t.assign(n, Vec3::Zero());
    ps.skipped.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 r = ps.points[i] - rel_pose.position;
        const SdfSample q = sdf_query(sdf, R.transpose() * r);
        if (q.clamped || q.d >= 0.0) continue;
        if (q.degenerate) {
            ps.skipped[i] = 1;
            continue;
        }
        const Vec3 nrm = R * q.n;
        // The point is fixed in the sensor; relative to the object material it
        // moves with minus the object's velocity at that location.
        const Vec3 xdot = -(lin + ang.cross(r));
        const double ddot = nrm.dot(xdot);
        const Vec3 fn = (-prm.k_n * q.d + prm.k_d * ddot) * nrm;
        const Vec3 vt = xdot - ddot * nrm;
        const double vtn = vt.norm();
        ps.f_n[i] = fn;
        if (vtn > 0.0) {
            const double cap = std::min(prm.k_t * vtn, prm.mu * fn.norm());
            Vec3 ft = -(vt / vtn) * cap;
            // Rounding can leave |ft| a few ulps above the cone; shrink until it is inside.
            for (double n = ft.norm(); n > cap; n = ft.norm()) ft *= std::nextafter(cap / n, 0.0);
            ps.f_t[i] = ft;
        }
    }
    return ps;
}

double penalty_normalization(const std::vector<TactilePointSet>& reference, double reference_max_u) {
    double fmax = 0.0;
    for (const auto& ps : reference)
        for (const auto& f : ps.f_t) fmax = std::max(fmax, (ps.sensor_frame * f).head<2>().norm());
    return fmax > 0.0 ? reference_max_u / fmax : 0.0;
}

MarkerField force_to_pseudo_displacement(const TactilePointSet& ps, double scale) {
    if (ps.f_t.size() != static_cast<std::size_t>(kMarkerCount))
        throw InvalidArgument("force_to_pseudo_displacement: expected a 7x9 point lattice, got " +
                              std::to_string(ps.f_t.size()) + " points");
    MarkerField f;
    for (std::size_t i = 0; i < ps.f_t.size(); ++i) f.u[i] = scale * (ps.sensor_frame * ps.f_t[i]).head<2>();
    return f;
}

} // namespace tacsim
