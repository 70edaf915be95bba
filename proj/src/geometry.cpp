#include "tacsim/geometry.hpp"
#include "tacsim/distance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace tacsim {

double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

TetMesh TetMesh::create(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets,
                        std::vector<int> dirichlet) {
    TetMesh m;
    const int nv = static_cast<int>(vertices.size());
    for (const auto& v : vertices) {
        if (!v.allFinite()) throw InvalidArgument("TetMesh: non-finite vertex coordinate");
    }
    double scale = 0.0;
    for (const auto& v : vertices) scale = std::max(scale, v.cwiseAbs().maxCoeff());
    for (auto& t : tets) {
        for (int i : t) {
            if (i < 0 || i >= nv) throw InvalidArgument("TetMesh: tet index out of range");
        }
        double vol = signed_tet_volume(vertices[t[0]], vertices[t[1]], vertices[t[2]], vertices[t[3]]);
        if (std::abs(vol) <= 1e-15 * scale * scale * scale) {
            throw InvalidArgument("TetMesh: degenerate tetrahedron");
        }
        if (vol < 0) std::swap(t[2], t[3]);
    }
    std::sort(dirichlet.begin(), dirichlet.end());
    dirichlet.erase(std::unique(dirichlet.begin(), dirichlet.end()), dirichlet.end());
    for (int d : dirichlet) {
        if (d < 0 || d >= nv) throw InvalidArgument("TetMesh: dirichlet index out of range");
    }
    m.vertices = std::move(vertices);
    m.tets = std::move(tets);
    m.dirichlet = std::move(dirichlet);
    m.rest_volumes.reserve(m.tets.size());
    m.inv_rest_shape.reserve(m.tets.size());
    for (const auto& t : m.tets) {
        Mat3 dm;
        dm.col(0) = m.vertices[t[1]] - m.vertices[t[0]];
        dm.col(1) = m.vertices[t[2]] - m.vertices[t[0]];
        dm.col(2) = m.vertices[t[3]] - m.vertices[t[0]];
        m.rest_volumes.push_back(dm.determinant() / 6.0);
        m.inv_rest_shape.push_back(dm.inverse());
    }
    return m;
}

bool TetMesh::is_dirichlet(int v) const {
    return std::binary_search(dirichlet.begin(), dirichlet.end(), v);
}

std::vector<char> TetMesh::dirichlet_mask() const {
    std::vector<char> mask(vertices.size(), 0);
    for (int d : dirichlet) mask[d] = 1;
    return mask;
}

std::vector<std::array<int, 2>> SurfaceMesh::unique_edges(const std::vector<std::array<int, 3>>& tris) {
    std::vector<std::array<int, 2>> edges;
    edges.reserve(tris.size() * 3);
    for (const auto& t : tris) {
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            edges.push_back({std::min(a, b), std::max(a, b)});
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

SurfaceMesh SurfaceMesh::from_triangles(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> tris) {
    SurfaceMesh s;
    s.vertices = std::move(vertices);
    s.triangles = std::move(tris);
    s.edges = unique_edges(s.triangles);
    return s;
}

// ---------------------------------------------------------------------------
// Gel pad

TetMesh build_gel_pad(const Vec3& extent, const std::array<int, 3>& resolution) {
    if (!(extent.minCoeff() > 0.0) || !extent.allFinite()) {
        throw InvalidArgument("build_gel_pad: extent must be positive");
    }
    for (int r : resolution) {
        if (r < 1) throw InvalidArgument("build_gel_pad: resolution must be >= 1 per axis");
    }
    const int nx = resolution[0], ny = resolution[1], nz = resolution[2];
    auto vid = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };

    std::vector<Vec3> verts;
    verts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1));
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i)
                verts.emplace_back(extent.x() * i / nx, extent.y() * j / ny, extent.z() * k / nz);

    // Kuhn split of each cell along a main diagonal. Cells in the upper half of
    // an axis are mirrored so the mesh is symmetric about the pad mid-planes.
    static constexpr std::array<std::array<int, 3>, 6> perms{{
        {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
    }};
    std::vector<std::array<int, 4>> tets;
    tets.reserve(static_cast<std::size_t>(nx) * ny * nz * 6);
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const std::array<int, 3> cell{i, j, k};
                const std::array<bool, 3> flip{2 * i >= nx, 2 * j >= ny, 2 * k >= nz};
                auto corner = [&](const std::array<int, 3>& bits) {
                    std::array<int, 3> c{};
                    for (int a = 0; a < 3; ++a) c[a] = cell[a] + (flip[a] ? 1 - bits[a] : bits[a]);
                    return vid(c[0], c[1], c[2]);
                };
                for (const auto& p : perms) {
                    std::array<int, 3> bits{0, 0, 0};
                    std::array<int, 4> t{};
                    t[0] = corner(bits);
                    for (int s = 0; s < 3; ++s) {
                        bits[p[s]] = 1;
                        t[s + 1] = corner(bits);
                    }
                    tets.push_back(t);
                }
            }

    std::vector<int> dirichlet;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) dirichlet.push_back(vid(i, j, 0));
    return TetMesh::create(std::move(verts), std::move(tets), std::move(dirichlet));
}

SurfaceMesh extract_surface(const TetMesh& mesh) {
    // Faces opposite each vertex, oriented outward for a positive tet.
    static constexpr std::array<std::array<int, 3>, 4> faces{{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};
    std::map<std::array<int, 3>, std::pair<int, std::array<int, 3>>> count;
    for (const auto& t : mesh.tets) {
        for (const auto& f : faces) {
            std::array<int, 3> tri{t[f[0]], t[f[1]], t[f[2]]};
            std::array<int, 3> key = tri;
            std::sort(key.begin(), key.end());
            auto [it, inserted] = count.try_emplace(key, 0, tri);
            it->second.first += 1;
        }
    }
    std::vector<int> local(mesh.vertices.size(), -1);
    SurfaceMesh s;
    std::vector<std::array<int, 3>> boundary;
    for (const auto& [key, entry] : count) {
        if (entry.first == 1) boundary.push_back(entry.second);
    }
    // Deterministic vertex numbering: ascending source id.
    std::vector<int> used;
    for (const auto& tri : boundary)
        for (int v : tri) used.push_back(v);
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    for (std::size_t i = 0; i < used.size(); ++i) {
        local[used[i]] = static_cast<int>(i);
        s.vertices.push_back(mesh.vertices[used[i]]);
    }
    s.source_ids = used;
    for (const auto& tri : boundary) s.triangles.push_back({local[tri[0]], local[tri[1]], local[tri[2]]});
    std::sort(s.triangles.begin(), s.triangles.end());
    s.edges = SurfaceMesh::unique_edges(s.triangles);
    return s;
}

// ---------------------------------------------------------------------------
// Signed distance fields

void require_watertight(const SurfaceMesh& shell) {
    std::map<std::array<int, 2>, int> uses;
    for (const auto& t : shell.triangles) {
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            uses[{std::min(a, b), std::max(a, b)}] += 1;
        }
    }
    for (const auto& [e, n] : uses) {
        if (n != 2) {
            std::ostringstream os;
            os << "shell is not watertight: edge (" << e[0] << ", " << e[1] << ") is used by " << n
               << " triangle(s)";
            throw InvalidArgument(os.str());
        }
    }
}

double winding_number(const SurfaceMesh& shell, const Vec3& p) {
    // Van Oosterom-Strackee solid angle per triangle.
    double total = 0.0;
    for (const auto& t : shell.triangles) {
        Vec3 a = shell.vertices[t[0]] - p;
        Vec3 b = shell.vertices[t[1]] - p;
        Vec3 c = shell.vertices[t[2]] - p;
        double la = a.norm(), lb = b.norm(), lc = c.norm();
        double num = a.dot(b.cross(c));
        double den = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
        total += 2.0 * std::atan2(num, den);
    }
    return total / (4.0 * std::numbers::pi);
}

SdfGrid build_sdf_grid(const SurfaceMesh& shell, const std::array<int, 3>& dims, double padding) {
    for (int d : dims) {
        if (d < 8) throw InvalidArgument("build_sdf_grid: dims must be >= 8 per axis");
    }
    if (shell.triangles.empty()) throw InvalidArgument("build_sdf_grid: empty shell");
    require_watertight(shell);
    Vec3 lo = shell.vertices.front(), hi = lo;
    for (const auto& v : shell.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    lo.array() -= padding;
    hi.array() += padding;
    // Uniform spacing: the largest axis sets it, the grid may overhang on the others.
    double spacing = 0.0;
    for (int a = 0; a < 3; ++a) spacing = std::max(spacing, (hi[a] - lo[a]) / (dims[a] - 1));
    SdfGrid g;
    g.origin = 0.5 * (lo + hi) - 0.5 * spacing * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1);
    g.spacing = spacing;
    g.dims = dims;
    g.values.resize(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);
    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i) {
                Vec3 p = g.node_position(i, j, k);
                double best = std::numeric_limits<double>::infinity();
                for (const auto& t : shell.triangles) {
                    best = std::min(best, point_triangle(p, shell.vertices[t[0]], shell.vertices[t[1]],
                                                         shell.vertices[t[2]])
                                              .distance);
                }
                bool inside = winding_number(shell, p) > 0.5;
                g.values[g.index(i, j, k)] = static_cast<float>(inside ? -best : best);
            }
    return g;
}

double sdf_interpolate(const SdfGrid& g, const Vec3& p) {
    Vec3 q = (p - g.origin) / g.spacing;
    std::array<int, 3> i0{};
    std::array<double, 3> f{};
    for (int a = 0; a < 3; ++a) {
        double c = std::clamp(q[a], 0.0, static_cast<double>(g.dims[a] - 1));
        int base = std::min(static_cast<int>(std::floor(c)), g.dims[a] - 2);
        i0[a] = base;
        f[a] = c - base;
    }
    double v = 0.0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                double w = (dx ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dz ? f[2] : 1 - f[2]);
                v += w * g.at(i0[0] + dx, i0[1] + dy, i0[2] + dz);
            }
    return v;
}

SdfSample sdf_query(const SdfGrid& g, const Vec3& p) {
    SdfSample s;
    Vec3 lo = g.origin, hi = g.upper();
    Vec3 c = p.cwiseMax(lo).cwiseMin(hi);
    s.clamped = (c - p).squaredNorm() > 0.0;
    s.d = sdf_interpolate(g, c);
    const double h = 0.5 * g.spacing;
    Vec3 grad;
    for (int a = 0; a < 3; ++a) {
        Vec3 e = Vec3::Zero();
        e[a] = h;
        Vec3 ph = (c + e).cwiseMin(hi), mh = (c - e).cwiseMax(lo);
        double span = ph[a] - mh[a];
        grad[a] = span > 0 ? (sdf_interpolate(g, ph) - sdf_interpolate(g, mh)) / span : 0.0;
    }
    double len = grad.norm();
    if (!(len > 1e-12)) {
        s.degenerate = true;
        s.n.setZero();
    } else {
        s.n = grad / len;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Indenter shells

namespace {

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Ear clipping of a simple CCW polygon.
std::vector<std::array<int, 3>> ear_clip(const std::vector<Eigen::Vector2d>& poly) {
    std::vector<int> idx(poly.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::vector<std::array<int, 3>> out;
    while (idx.size() > 3) {
        bool clipped = false;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            int ia = idx[(i + idx.size() - 1) % idx.size()], ib = idx[i], ic = idx[(i + 1) % idx.size()];
            const auto &a = poly[ia], &b = poly[ib], &c = poly[ic];
            if (cross2(b - a, c - b) <= 0) continue;
            bool contains = false;
            for (int j : idx) {
                if (j == ia || j == ib || j == ic) continue;
                const auto& p = poly[j];
                if (cross2(b - a, p - a) >= 0 && cross2(c - b, p - b) >= 0 && cross2(a - c, p - c) >= 0) {
                    contains = true;
                    break;
                }
            }
            if (contains) continue;
            out.push_back({ia, ib, ic});
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
            clipped = true;
            break;
        }
        if (!clipped) throw InvalidArgument("ear_clip: polygon is not simple");
    }
    out.push_back({idx[0], idx[1], idx[2]});
    return out;
}

} // namespace

SurfaceMesh make_prism_shell(const std::vector<Eigen::Vector2d>& polygon_in, double height, bool center_fan_caps) {
    if (polygon_in.size() < 3 || !(height > 0)) throw InvalidArgument("make_prism_shell: bad polygon or height");
    std::vector<Eigen::Vector2d> poly = polygon_in;
    if (polygon_area(poly) < 0) std::reverse(poly.begin(), poly.end());
    const int n = static_cast<int>(poly.size());
    std::vector<Vec3> v;
    for (const auto& p : poly) v.emplace_back(p.x(), p.y(), 0.0);
    for (const auto& p : poly) v.emplace_back(p.x(), p.y(), height);
    std::vector<std::array<int, 3>> tris;
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        tris.push_back({i, j, n + j});
        tris.push_back({i, n + j, n + i});
    }
    if (center_fan_caps) {
        Eigen::Vector2d c = Eigen::Vector2d::Zero();
        for (const auto& p : poly) c += p;
        c /= n;
        int cb = static_cast<int>(v.size());
        v.emplace_back(c.x(), c.y(), 0.0);
        int ct = static_cast<int>(v.size());
        v.emplace_back(c.x(), c.y(), height);
        for (int i = 0; i < n; ++i) {
            int j = (i + 1) % n;
            tris.push_back({cb, j, i});
            tris.push_back({ct, n + i, n + j});
        }
    } else {
        for (const auto& t : ear_clip(poly)) {
            tris.push_back({t[0], t[2], t[1]});
            tris.push_back({n + t[0], n + t[1], n + t[2]});
        }
    }
    return SurfaceMesh::from_triangles(std::move(v), std::move(tris));
}

SurfaceMesh make_box_shell(double side, double height) {
    double s = 0.5 * side;
    return make_prism_shell({{-s, -s}, {s, -s}, {s, s}, {-s, s}}, height, true);
}

SurfaceMesh make_cylinder_shell(double radius, double height, int segments) {
    std::vector<Eigen::Vector2d> poly;
    for (int i = 0; i < segments; ++i) {
        double a = 2.0 * std::numbers::pi * i / segments;
        poly.emplace_back(radius * std::cos(a), radius * std::sin(a));
    }
    return make_prism_shell(poly, height, true);
}

SurfaceMesh make_triangle_shell(double side, double height) {
    double r = side / std::sqrt(3.0);
    std::vector<Eigen::Vector2d> poly;
    for (int i = 0; i < 3; ++i) {
        double a = std::numbers::pi / 2 + 2.0 * std::numbers::pi * i / 3;
        poly.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    return make_prism_shell(poly, height, true);
}

SurfaceMesh make_moon_shell(double radius, double height, int segments) {
    // Crescent: inside a circle of `radius` at the origin, outside an equal
    // circle shifted by 0.6 * radius along +x. The circles meet at x = 0.3 r.
    const double r = radius, off = 0.6 * radius;
    const double outer0 = std::atan2(std::sqrt(1 - 0.09), 0.3);
    const double outer1 = 2 * std::numbers::pi - outer0;
    const double inner0 = std::atan2(-std::sqrt(1 - 0.09), 0.3 - 0.6) + 2 * std::numbers::pi;
    const double inner1 = std::atan2(std::sqrt(1 - 0.09), 0.3 - 0.6);
    std::vector<Eigen::Vector2d> poly;
    for (int i = 0; i < segments; ++i) {
        double a = outer0 + (outer1 - outer0) * i / segments;
        poly.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    for (int i = 0; i < segments; ++i) {
        double a = inner0 + (inner1 - inner0) * i / segments;
        poly.emplace_back(off + r * std::cos(a), r * std::sin(a));
    }
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& p : poly) c += p;
    c /= static_cast<double>(poly.size());
    for (auto& p : poly) p -= c;
    return make_prism_shell(poly, height, false);
}

SurfaceMesh make_icosphere(double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    std::vector<std::array<int, 3>> f{{0, 11, 5}, {0, 5, 1}, {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (auto& p : v) p.normalize();
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            int id = static_cast<int>(v.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> nf;
        for (const auto& tri : f) {
            int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
            nf.push_back({tri[0], a, c});
            nf.push_back({tri[1], b, a});
            nf.push_back({tri[2], c, b});
            nf.push_back({a, b, c});
        }
        f = std::move(nf);
    }
    for (auto& p : v) p *= radius;
    return SurfaceMesh::from_triangles(std::move(v), std::move(f));
}

SurfaceMesh make_indenter(const std::string& shape, double size, double height) {
    if (shape == "cube") return make_box_shell(size, height);
    if (shape == "cylinder") return make_cylinder_shell(0.5 * size, height);
    if (shape == "triangle") return make_triangle_shell(size, height);
    if (shape == "moon") return make_moon_shell(0.5 * size, height);
    throw InvalidArgument("unknown indenter shape '" + shape + "' (expected cube|cylinder|moon|triangle)");
}

// ---------------------------------------------------------------------------
// IO

TetMesh load_tet(const std::filesystem::path& path, double scale) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open tet mesh '" + path.string() + "'");
    std::string tag;
    long nv = -1, nt = -1;
    in >> tag >> nv >> nt;
    if (!in || tag != "tet" || nv < 4 || nt < 1) {
        throw InvalidArgument("'" + path.string() + "': expected header 'tet <V> <T>'");
    }
    std::vector<Vec3> verts(nv);
    for (auto& v : verts) {
        in >> v.x() >> v.y() >> v.z();
        v *= scale;
    }
    std::vector<std::array<int, 4>> tets(nt);
    for (auto& t : tets) in >> t[0] >> t[1] >> t[2] >> t[3];
    if (!in) throw InvalidArgument("'" + path.string() + "': truncated tet mesh");
    return TetMesh::create(std::move(verts), std::move(tets));
}

void save_tet(const TetMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out.precision(17);
    out << "tet " << mesh.vertices.size() << ' ' << mesh.tets.size() << '\n';
    for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.tets) out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
}

SurfaceMesh load_obj(const std::filesystem::path& path, double scale) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open OBJ '" + path.string() + "'");
    std::vector<Vec3> verts;
    std::vector<std::array<int, 3>> tris;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string rec;
        ls >> rec;
        if (rec == "v") {
            Vec3 p;
            ls >> p.x() >> p.y() >> p.z();
            if (!ls) throw InvalidArgument("'" + path.string() + "': malformed vertex record");
            verts.push_back(scale * p);
        } else if (rec == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ls >> tok) {
                int i = std::stoi(tok.substr(0, tok.find('/')));
                i = i < 0 ? static_cast<int>(verts.size()) + i : i - 1;
                if (i < 0 || i >= static_cast<int>(verts.size())) {
                    throw InvalidArgument("'" + path.string() + "': face index out of range");
                }
                poly.push_back(i);
            }
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) tris.push_back({poly[0], poly[k], poly[k + 1]});
        }
    }
    return SurfaceMesh::from_triangles(std::move(verts), std::move(tris));
}

void save_obj(const SurfaceMesh& shell, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out.precision(17);
    for (const auto& v : shell.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : shell.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

static_assert(std::endian::native == std::endian::little, "SDF cache IO assumes a little-endian host");

void save_sdf(const SdfGrid& g, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out.write("SDF1", 4);
    for (int d : g.dims) {
        std::int32_t v = d;
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    for (int a = 0; a < 3; ++a) {
        double o = g.origin[a];
        out.write(reinterpret_cast<const char*>(&o), sizeof o);
    }
    out.write(reinterpret_cast<const char*>(&g.spacing), sizeof g.spacing);
    out.write(reinterpret_cast<const char*>(g.values.data()),
              static_cast<std::streamsize>(g.values.size() * sizeof(float)));
}

SdfGrid load_sdf(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open SDF cache '" + path.string() + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SDF1", 4) != 0) throw InvalidArgument("'" + path.string() + "': bad SDF magic");
    SdfGrid g;
    for (int a = 0; a < 3; ++a) {
        std::int32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof v);
        if (v < 2) throw InvalidArgument("'" + path.string() + "': bad SDF dims");
        g.dims[a] = v;
    }
    for (int a = 0; a < 3; ++a) in.read(reinterpret_cast<char*>(&g.origin[a]), sizeof(double));
    in.read(reinterpret_cast<char*>(&g.spacing), sizeof g.spacing);
    g.values.resize(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2]);
    in.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(float)));
    if (!in) throw InvalidArgument("'" + path.string() + "': truncated SDF cache");
    return g;
}

} // namespace tacsim
