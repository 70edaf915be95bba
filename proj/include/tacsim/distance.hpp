#ifndef TACSIM_DISTANCE_HPP
#define TACSIM_DISTANCE_HPP

#include "tacsim/types.hpp"

namespace tacsim {

/// Closest-point result between two primitives with up to four vertices.
/// weights are signed: the distance vector is sum_i weights[i] * v_i and the
/// gradient of the distance with respect to v_i is weights[i] * normal.
struct ClosestPoints {
    double distance = 0.0;
    Vec3 normal = Vec3::Zero();  ///< unit, points from the second primitive to the first
    std::array<double, 4> weights{0, 0, 0, 0};
    int active = 0;               ///< number of vertices with nonzero weight (2 point-point, 3 point-edge, 4 plane/line-line)
};

/// Point p against triangle (a, b, c). Vertex order in weights: p, a, b, c.
ClosestPoints point_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Segment (a0, a1) against segment (b0, b1). Weight order: a0, a1, b0, b1.
ClosestPoints edge_edge(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1);

/// Distance together with its first and second derivative along the
/// straight-line motion v_i + t * dv_i at t = 0. The closest-feature type
/// of `cp` is held fixed, which gives the exact one-sided derivatives.
struct DistanceJet {
    double d = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

DistanceJet distance_jet(const ClosestPoints& cp, const std::array<Vec3, 4>& v, const std::array<Vec3, 4>& dv);

} // namespace tacsim

#endif
