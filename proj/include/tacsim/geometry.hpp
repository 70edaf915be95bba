#ifndef TACSIM_GEOMETRY_HPP
#define TACSIM_GEOMETRY_HPP

#include "tacsim/types.hpp"

#include <filesystem>
#include <optional>

namespace tacsim {

/// Volumetric tetrahedral mesh of a deformable body, with precomputed rest
/// quantities. Build through TetMesh::create so the invariants hold.
struct TetMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> tets;
    std::vector<int> dirichlet; ///< sorted, unique
    std::vector<double> rest_volumes;
    std::vector<Mat3> inv_rest_shape;

    /// Validates indices, reorients negatively oriented tets, and precomputes
    /// rest volumes and inverse rest shapes. Degenerate tets are rejected.
    static TetMesh create(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> tets,
                          std::vector<int> dirichlet = {});

    std::size_t num_vertices() const { return vertices.size(); }
    bool is_dirichlet(int v) const;
    std::vector<char> dirichlet_mask() const;
};

/// Triangulated boundary. For surfaces extracted from a TetMesh, source_ids
/// maps each surface vertex to its index in the volume mesh.
struct SurfaceMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> edges;
    std::vector<int> source_ids;

    /// Sorted unique edge list of the triangles.
    static std::vector<std::array<int, 2>> unique_edges(const std::vector<std::array<int, 3>>& tris);
    static SurfaceMesh from_triangles(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> tris);
};

struct SdfGrid {
    Vec3 origin = Vec3::Zero();
    double spacing = 0.0;
    std::array<int, 3> dims{0, 0, 0};
    std::vector<float> values; ///< x-fastest

    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
    }
    double at(int i, int j, int k) const { return values[index(i, j, k)]; }
    Vec3 node_position(int i, int j, int k) const { return origin + spacing * Vec3(i, j, k); }
    Vec3 upper() const { return origin + spacing * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1); }
};

struct SdfSample {
    double d = 0.0;
    Vec3 n = Vec3::Zero();
    bool clamped = false;
    bool degenerate = false;
};

TetMesh build_gel_pad(const Vec3& extent, const std::array<int, 3>& resolution);
SurfaceMesh extract_surface(const TetMesh& mesh);

/// Throws InvalidArgument naming the first edge not shared by exactly two triangles.
void require_watertight(const SurfaceMesh& shell);
double winding_number(const SurfaceMesh& shell, const Vec3& p);

SdfGrid build_sdf_grid(const SurfaceMesh& shell, const std::array<int, 3>& dims, double padding);
double sdf_interpolate(const SdfGrid& grid, const Vec3& p);
SdfSample sdf_query(const SdfGrid& grid, const Vec3& p);

double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

// Rigid indenter shells. The contact face lies in z = 0 centered at the
// origin; the body extends towards +z.
SurfaceMesh make_prism_shell(const std::vector<Eigen::Vector2d>& polygon, double height, bool center_fan_caps);
SurfaceMesh make_box_shell(double side, double height);
SurfaceMesh make_cylinder_shell(double radius, double height, int segments = 32);
SurfaceMesh make_triangle_shell(double side, double height);
SurfaceMesh make_moon_shell(double radius, double height, int segments = 24);
SurfaceMesh make_icosphere(double radius, int subdivisions);
SurfaceMesh make_indenter(const std::string& shape, double size, double height);

// File IO. Lengths are scaled by `scale` on load (e.g. 1e-3 for mm files).
TetMesh load_tet(const std::filesystem::path& path, double scale = 1.0);
void save_tet(const TetMesh& mesh, const std::filesystem::path& path);
SurfaceMesh load_obj(const std::filesystem::path& path, double scale = 1.0);
void save_obj(const SurfaceMesh& shell, const std::filesystem::path& path);
void save_sdf(const SdfGrid& grid, const std::filesystem::path& path);
SdfGrid load_sdf(const std::filesystem::path& path);

} // namespace tacsim

#endif
