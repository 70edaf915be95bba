#ifndef TACSIM_CONTACT_HPP
#define TACSIM_CONTACT_HPP

#include "tacsim/energy.hpp"

namespace tacsim {

enum class ContactKind { PointTriangle = 0, EdgeEdge = 1 };

struct ContactPair {
    ContactKind kind = ContactKind::PointTriangle;
    /// Global vertex ids: (point, a, b, c) or (a0, a1, b0, b1).
    std::array<int, 4> ids{};
    /// Primitive indices in the owning meshes (vertex/triangle or edge/edge).
    std::array<int, 2> prims{};
    double d = 0.0;
    double lambda_n = 0.0;
    Vec3 normal = Vec3::Zero();
    Mat32 T = Mat32::Zero();
    /// Signed closest-point weights at the step start; the relative contact
    /// displacement is sum_i anchor[i] * (x_i - x_i^t).
    std::array<double, 4> anchor{};
};

struct ContactSet {
    std::vector<ContactPair> pairs;
    double dhat = 0.0;
};

/// A surface placed in the global position vector: global id of local vertex i
/// is offset + (source_ids.empty() ? i : source_ids[i]).
struct CollisionMesh {
    const SurfaceMesh* mesh = nullptr;
    int offset = 0;
    int body = 0;

    int global(int local) const {
        return offset + (mesh->source_ids.empty() ? local : mesh->source_ids[local]);
    }
};

/// Candidate primitive pair. For PointTriangle, `first` is a vertex of mesh
/// `point_side` and `second` a triangle of the other mesh. For EdgeEdge,
/// `first` is an edge of mesh 0 and `second` an edge of mesh 1.
struct Candidate {
    ContactKind kind = ContactKind::PointTriangle;
    int point_side = 0;
    int first = 0;
    int second = 0;

    auto operator<=>(const Candidate&) const = default;
};

/// Spatial-hash culling with cell size = radius. Returns a sorted superset of
/// all primitive pairs whose bounding boxes come within `radius`.
std::vector<Candidate> broad_phase(const CollisionMesh& a, const CollisionMesh& b, const VecX& x, double radius);

/// Same, between non-adjacent primitives of one surface.
std::vector<Candidate> broad_phase_self(const CollisionMesh& a, const VecX& x, double radius);

/// Global ids and closest points of one candidate.
ContactEval evaluate_candidate(const Candidate& c, const CollisionMesh& a, const CollisionMesh& b, const VecX& x);

/// Exact distances; keeps pairs with d < dhat. Point contacts reached through
/// several triangles keep the minimal-distance representative (lowest
/// triangle index on ties). Every edge-edge pair within dhat is kept with its
/// segment distance, so the barrier sum stays continuous when a closest point
/// crosses an endpoint or the edges turn parallel.
ContactSet narrow_phase(const std::vector<Candidate>& candidates, const CollisionMesh& a, const CollisionMesh& b,
                        const VecX& x, double dhat);

/// lambda_n = max(0, -kappa b'(d)); T spans the plane orthogonal to the contact normal.
ContactSet build_friction_anchors(ContactSet set, const VecX& x_t, const BarrierParams& bp);

Mat32 tangent_basis(const Vec3& n);

/// Smallest distance over all candidate pairs (infinity when empty).
double min_distance(const std::vector<Candidate>& candidates, const CollisionMesh& a, const CollisionMesh& b,
                    const VecX& x);

/// True when an edge of one surface crosses a triangle of the other.
bool surfaces_intersect(const CollisionMesh& a, const CollisionMesh& b, const VecX& x);

} // namespace tacsim

#endif
