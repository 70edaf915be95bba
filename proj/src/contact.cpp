#include "tacsim/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

namespace tacsim {

namespace {

struct Box {
    Vec3 lo, hi;
};

Box box_of(std::initializer_list<Vec3> pts) {
    Box b{*pts.begin(), *pts.begin()};
    for (const auto& p : pts) {
        b.lo = b.lo.cwiseMin(p);
        b.hi = b.hi.cwiseMax(p);
    }
    return b;
}

double box_gap(const Box& a, const Box& b) {
    Vec3 gap = (a.lo - b.hi).cwiseMax(b.lo - a.hi).cwiseMax(Vec3::Zero());
    return gap.norm();
}

// Uniform spatial hash with cell size `cell`. Returns (query, stored) index
// pairs with box gap <= radius, sorted.
std::vector<std::pair<int, int>> hash_pairs(const std::vector<Box>& stored, const std::vector<Box>& queries,
                                            double radius, double cell) {
    std::vector<std::pair<int, int>> out;
    if (stored.empty() || queries.empty()) return out;
    auto key = [](long long i, long long j, long long k) {
        return (i * 73856093LL) ^ (j * 19349663LL) ^ (k * 83492791LL);
    };
    auto cell_of = [cell](double v) { return static_cast<long long>(std::floor(v / cell)); };
    std::unordered_map<long long, std::vector<int>> grid;
    for (std::size_t s = 0; s < stored.size(); ++s) {
        const auto& b = stored[s];
        for (long long k = cell_of(b.lo.z()); k <= cell_of(b.hi.z()); ++k)
            for (long long j = cell_of(b.lo.y()); j <= cell_of(b.hi.y()); ++j)
                for (long long i = cell_of(b.lo.x()); i <= cell_of(b.hi.x()); ++i)
                    grid[key(i, j, k)].push_back(static_cast<int>(s));
    }
    std::vector<int> found;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        Box b = queries[q];
        b.lo.array() -= radius;
        b.hi.array() += radius;
        found.clear();
        for (long long k = cell_of(b.lo.z()); k <= cell_of(b.hi.z()); ++k)
            for (long long j = cell_of(b.lo.y()); j <= cell_of(b.hi.y()); ++j)
                for (long long i = cell_of(b.lo.x()); i <= cell_of(b.hi.x()); ++i) {
                    auto it = grid.find(key(i, j, k));
                    if (it != grid.end()) found.insert(found.end(), it->second.begin(), it->second.end());
                }
        std::sort(found.begin(), found.end());
        found.erase(std::unique(found.begin(), found.end()), found.end());
        for (int s : found) {
            if (box_gap(queries[q], stored[s]) <= radius) out.emplace_back(static_cast<int>(q), s);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Vec3 pos(const VecX& x, const CollisionMesh& m, int local) { return vertex(x, m.global(local)); }

std::vector<Box> vertex_boxes(const CollisionMesh& m, const VecX& x) {
    std::vector<Box> out;
    for (std::size_t i = 0; i < m.mesh->vertices.size(); ++i) {
        Vec3 p = pos(x, m, static_cast<int>(i));
        out.push_back({p, p});
    }
    return out;
}

std::vector<Box> triangle_boxes(const CollisionMesh& m, const VecX& x) {
    std::vector<Box> out;
    for (const auto& t : m.mesh->triangles) out.push_back(box_of({pos(x, m, t[0]), pos(x, m, t[1]), pos(x, m, t[2])}));
    return out;
}

std::vector<Box> edge_boxes(const CollisionMesh& m, const VecX& x) {
    std::vector<Box> out;
    for (const auto& e : m.mesh->edges) out.push_back(box_of({pos(x, m, e[0]), pos(x, m, e[1])}));
    return out;
}

double pick_cell(double radius, const std::vector<Box>& stored) {
    // The hash cell equals the query radius; very large primitives would
    // otherwise fill millions of cells, so the cell grows to a fraction of the
    // mean stored extent when that is larger.
    double mean = 0.0;
    for (const auto& b : stored) mean += (b.hi - b.lo).maxCoeff();
    if (!stored.empty()) mean /= static_cast<double>(stored.size());
    return std::max(radius, 0.25 * mean);
}

bool shares_vertex(const std::array<int, 3>& t, int v) { return t[0] == v || t[1] == v || t[2] == v; }

bool segment_crosses_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
    auto orient = [](const Vec3& u, const Vec3& v, const Vec3& w, const Vec3& z) { return (v - u).dot((w - u).cross(z - u)); };
    const double sp = orient(a, b, c, p), sq = orient(a, b, c, q);
    if ((sp > 0 && sq > 0) || (sp < 0 && sq < 0)) return false;
    if (sp == 0 && sq == 0) return false;  // coplanar: reported through distance checks
    const double s1 = orient(p, q, a, b), s2 = orient(p, q, b, c), s3 = orient(p, q, c, a);
    return (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
}

} // namespace

std::vector<Candidate> broad_phase(const CollisionMesh& a, const CollisionMesh& b, const VecX& x, double radius) {
    std::vector<Candidate> out;
    const auto va = vertex_boxes(a, x), vb = vertex_boxes(b, x);
    const auto ta = triangle_boxes(a, x), tb = triangle_boxes(b, x);
    const auto ea = edge_boxes(a, x), eb = edge_boxes(b, x);
    for (auto [q, s] : hash_pairs(tb, va, radius, pick_cell(radius, tb)))
        out.push_back({ContactKind::PointTriangle, 0, q, s});
    for (auto [q, s] : hash_pairs(ta, vb, radius, pick_cell(radius, ta)))
        out.push_back({ContactKind::PointTriangle, 1, q, s});
    for (auto [q, s] : hash_pairs(eb, ea, radius, pick_cell(radius, eb)))
        out.push_back({ContactKind::EdgeEdge, 0, q, s});
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Candidate> broad_phase_self(const CollisionMesh& a, const VecX& x, double radius) {
    std::vector<Candidate> out;
    const auto& m = *a.mesh;
    const auto va = vertex_boxes(a, x), ta = triangle_boxes(a, x), ea = edge_boxes(a, x);
    for (auto [q, s] : hash_pairs(ta, va, radius, pick_cell(radius, ta))) {
        if (!shares_vertex(m.triangles[s], q)) out.push_back({ContactKind::PointTriangle, 0, q, s});
    }
    for (auto [q, s] : hash_pairs(ea, ea, radius, pick_cell(radius, ea))) {
        const auto &e0 = m.edges[q], &e1 = m.edges[s];
        if (q < s && e0[0] != e1[0] && e0[0] != e1[1] && e0[1] != e1[0] && e0[1] != e1[1])
            out.push_back({ContactKind::EdgeEdge, 0, q, s});
    }
    std::sort(out.begin(), out.end());
    return out;
}

ContactEval evaluate_candidate(const Candidate& c, const CollisionMesh& a, const CollisionMesh& b, const VecX& x) {
    ContactEval ev;
    if (c.kind == ContactKind::PointTriangle) {
        const CollisionMesh& pm = c.point_side == 0 ? a : b;
        const CollisionMesh& tm = c.point_side == 0 ? b : a;
        const auto& t = tm.mesh->triangles[c.second];
        ev.ids = {pm.global(c.first), tm.global(t[0]), tm.global(t[1]), tm.global(t[2])};
    } else {
        const auto& e0 = a.mesh->edges[c.first];
        const auto& e1 = b.mesh->edges[c.second];
        ev.ids = {a.global(e0[0]), a.global(e0[1]), b.global(e1[0]), b.global(e1[1])};
    }
    std::array<Vec3, 4> v;
    for (int i = 0; i < 4; ++i) v[i] = vertex(x, ev.ids[i]);
    ev.cp = c.kind == ContactKind::PointTriangle ? point_triangle(v[0], v[1], v[2], v[3])
                                                 : edge_edge(v[0], v[1], v[2], v[3]);
    return ev;
}

ContactSet narrow_phase(const std::vector<Candidate>& candidates, const CollisionMesh& a, const CollisionMesh& b,
                        const VecX& x, double dhat) {
    ContactSet set;
    set.dhat = dhat;
    // Point contacts keyed by (side, vertex); candidates arrive sorted so the
    // first minimum seen has the lowest triangle index.
    std::map<std::pair<int, int>, ContactPair> best_point;
    for (const auto& c : candidates) {
        const auto ev = evaluate_candidate(c, a, b, x);
        if (!(ev.cp.distance > 0)) {
            throw FeasibilityError("narrow_phase: contact distance " + std::to_string(ev.cp.distance) +
                                   " between vertices " + std::to_string(ev.ids[0]) + " and " +
                                   std::to_string(ev.ids[2]));
        }
        if (ev.cp.distance >= dhat) continue;
        ContactPair p;
        p.kind = c.kind;
        p.ids = ev.ids;
        p.prims = {c.first, c.second};
        p.d = ev.cp.distance;
        p.normal = ev.cp.normal;
        p.anchor = ev.cp.weights;
        if (c.kind == ContactKind::PointTriangle) {
            auto key = std::make_pair(c.point_side, c.first);
            auto it = best_point.find(key);
            if (it == best_point.end() || p.d < it->second.d) best_point[key] = p;
        } else {
            set.pairs.push_back(p);
        }
    }
    for (auto& [k, p] : best_point) set.pairs.push_back(p);
    std::sort(set.pairs.begin(), set.pairs.end(), [](const ContactPair& l, const ContactPair& r) {
        if (l.kind != r.kind) return l.kind < r.kind;
        return l.ids < r.ids;
    });
    return set;
}

Mat32 tangent_basis(const Vec3& n) {
    Vec3 axis = Vec3::UnitX();
    if (std::abs(n.y()) < std::abs(n.x()) && std::abs(n.y()) <= std::abs(n.z())) axis = Vec3::UnitY();
    else if (std::abs(n.z()) < std::abs(n.x()) && std::abs(n.z()) < std::abs(n.y())) axis = Vec3::UnitZ();
    Mat32 T;
    T.col(0) = n.cross(axis).normalized();
    T.col(1) = n.cross(T.col(0)).normalized();
    return T;
}

ContactSet build_friction_anchors(ContactSet set, const VecX& /*x_t*/, const BarrierParams& bp) {
    for (auto& p : set.pairs) {
        p.lambda_n = std::max(0.0, -barrier_term(p.d, bp).d1);
        p.T = tangent_basis(p.normal);
    }
    return set;
}

double min_distance(const std::vector<Candidate>& candidates, const CollisionMesh& a, const CollisionMesh& b,
                    const VecX& x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) d = std::min(d, evaluate_candidate(c, a, b, x).cp.distance);
    return d;
}

bool surfaces_intersect(const CollisionMesh& a, const CollisionMesh& b, const VecX& x) {
    auto check = [&x](const CollisionMesh& em, const CollisionMesh& tm) {
        const auto eboxes = edge_boxes(em, x), tboxes = triangle_boxes(tm, x);
        for (auto [q, s] : hash_pairs(tboxes, eboxes, 0.0, pick_cell(1e-9, tboxes))) {
            const auto& e = em.mesh->edges[q];
            const auto& t = tm.mesh->triangles[s];
            if (segment_crosses_triangle(pos(x, em, e[0]), pos(x, em, e[1]), pos(x, tm, t[0]), pos(x, tm, t[1]),
                                         pos(x, tm, t[2])))
                return true;
        }
        return false;
    };
    return check(a, b) || check(b, a);
}

} // namespace tacsim
