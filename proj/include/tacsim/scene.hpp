#ifndef TACSIM_SCENE_HPP
#define TACSIM_SCENE_HPP

#include "tacsim/baselines.hpp"
#include "tacsim/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>

namespace tacsim {

using json = nlohmann::json;

/// Box pad [-Lx/2, Lx/2] x [-Ly/2, Ly/2] x [-Lz, 0] with the base pinned, or a
/// mesh file used as is.
struct PadSpec {
    Vec3 extent{0.016, 0.012, 0.004};
    std::array<int, 3> resolution{16, 12, 4};
    std::filesystem::path mesh_path;
    double mesh_scale = 1.0;
};

struct IndenterSpec {
    std::string shape = "cube"; ///< cube | cylinder | moon | triangle
    double size = 0.005;
    double height = 0.004;
    std::filesystem::path mesh_path; ///< optional OBJ replacing the built-in shape
    double mesh_scale = 1.0;
};

struct MpmModelParams {
    MpmConfig cfg{0.0, 2, 1500.0, 0.0, 1e-6}; ///< headroom 0 selects the indenter height
    double move_speed = 0.1;  ///< m/s of the indenter between frames
    int settle_steps = 150;   ///< relaxation steps after each frame's motion
    double vmax = 5.0;        ///< explosion guard threshold (m/s)
    double dt_fraction = 0.9; ///< of the CFL limit
    int sdf_dims = 40;
};

struct PenaltyModelParams {
    PenaltyTactileParams params;
    double scale = 0.0; ///< force-to-displacement constant; 0 normalizes against an ipc run
    int sdf_dims = 40;
};

struct Scene {
    std::string name = "scene";
    PadSpec gel;
    IndenterSpec indenter;
    Material material;
    SolverConfig solver;
    std::string model = "ipc"; ///< ipc | mpm | penalty
    /// frames[0] is the start pose; fields are reported for observed frames after it.
    RigidScript script;
    std::uint64_t seed = 0;
    int marker_k = 4;
    double observation_noise = 0.0; ///< std-dev (m) of Gaussian noise added to fields
    MpmModelParams mpm;
    PenaltyModelParams penalty;

    void validate() const;
};

/// press: 10 frames of 0.1 mm normal increments; slide: 0.5 mm preload (not
/// observed) then 10 frames of 0.1 mm along +x; rotate: the same preload then
/// 4 frames of 0.5 deg about the surface normal. Frame 0 is the start pose
/// `gap` above the surface. Frames are `frame_dt` seconds apart.
RigidScript make_indentation_script(const std::string& mode, const std::string& shape, double gap = 1e-4,
                                    double frame_dt = 0.1);

Scene default_scene(const std::string& shape, const std::string& mode);

TetMesh build_pad(const PadSpec& spec);
SurfaceMesh build_indenter(const IndenterSpec& spec);

/// Length fields carry explicit units: {"value": 5, "unit": "mm"} (mm or m).
double parse_length(const json& j, const std::string& field);
Vec3 parse_length3(const json& j, const std::string& field);
json length_json(double meters);
json length3_json(const Vec3& meters);

Scene scene_from_json(const json& j, const std::filesystem::path& base_dir = {});
json scene_to_json(const Scene& s);
Scene load_scene(const std::filesystem::path& path);
json read_json_file(const std::filesystem::path& path);

} // namespace tacsim

#endif
