#ifndef TACSIM_HARNESS_HPP
#define TACSIM_HARNESS_HPP

#include "tacsim/scene.hpp"
#include "tacsim/tacalign.hpp"

#include <optional>

namespace tacsim {

struct StepRecord {
    int frame = 0;
    int iterations = 0;
    bool converged = true;
    double min_distance = 0.0;
    int active_contacts = 0;
};

struct SceneResult {
    std::string name;
    std::string model;
    FieldSequence fields; ///< observed frames, frame_id = script frame index
    std::vector<StepRecord> steps;
    double wall_seconds = 0.0;
    bool ok = true;
    int exit_code = 0; ///< 0 ok, 2 invalid input, 3 solver failure
    std::string error;
    json extra = json::object(); ///< model-specific diagnostics
};

struct RunOptions {
    StepObserver observer;                        ///< ipc only: per accepted step
    const FieldSequence* ipc_reference = nullptr; ///< penalty normalization source
};

/// Runs the scene with its model. Failures are caught: the result keeps the
/// frames computed so far and records the error.
SceneResult run_scene(const Scene& scene, const RunOptions& opt = {});

/// markers.csv (with a model column) and diagnostics.json. Returns the files written.
std::vector<std::filesystem::path> write_scene_outputs(const SceneResult& r, const std::filesystem::path& dir);
json diagnostics_json(const SceneResult& r);

/// TACSIM_THREADS when set to a positive integer, otherwise the hardware concurrency.
int default_workers();

struct BatchSpec {
    std::vector<Scene> scenes;
    int workers = 1;
    std::filesystem::path output_dir; ///< empty: nothing written
};

/// {"workers": N, "output_dir": "...", "scenes": [scene object | "file.json", ...], "copies": 1}
BatchSpec batch_from_json(const json& j, const std::filesystem::path& base_dir = {});

struct BatchEntry {
    std::string name;
    bool ok = true;
    std::string error;
    double wall_seconds = 0.0;
    int frames = 0;
    std::filesystem::path dir;
};

struct BatchSummary {
    std::vector<BatchEntry> entries;
    int workers = 1;
    double wall_seconds = 0.0;
    double fps = 0.0; ///< observed frames of all scenes / wall seconds
    int failures = 0;
    json to_json() const;
};

/// Scenes run independently on a pool of `workers` threads; outputs are
/// written in scene order and do not depend on the worker count.
BatchSummary batch_run(const BatchSpec& spec, std::vector<SceneResult>* results = nullptr);
std::string scene_dir_name(std::size_t index, const std::string& name);

struct CompareReport {
    std::vector<std::string> models;
    std::vector<SceneResult> runs;
    /// mse[f][i][j]: squared field distance between models i and j at frame f.
    std::vector<std::vector<std::vector<double>>> mse;
    std::vector<std::vector<double>> max_u; ///< [model][frame]
    json to_json() const;
};

CompareReport compare_models(const Scene& base, const std::vector<std::string>& models);

/// Arrow plot on the fixed 7 x 9 lattice; arrow length = u * gain pixels.
std::string field_svg(const MarkerField& f, double gain, const std::string& title);

/// Small press scene used by `bench` and the scaling checks.
Scene bench_scene();

// ---------------------------------------------------------------------------
// JSON front ends for the tacalign tools

struct CalibrationSetup {
    std::vector<Scene> scenes;       ///< material is replaced by each candidate
    CalibrationProblem problem;
    CmaesOptions cmaes;
    std::optional<Material> theta_true; ///< set when the reference is synthetic
};

/// Runs every scene with material m; throws SolverError when a scene fails.
std::vector<FieldSequence> simulate_scenes(const std::vector<Scene>& scenes, const Material& m);

/// {"scenes": [...], "reference": {"material": {...}} | {"csv": ["a.csv", ...]},
///  "bounds": {"lo": [4], "hi": [4]}, "cmaes": {"popsize", "iters", "seed", "sigma0", "ftarget", "workers"}}
CalibrationSetup calibration_from_json(const json& j, const std::filesystem::path& base_dir = {});

struct AlignSetup {
    PlantModel sim, real;
    GainPair init;
    int rounds = 3;
    AlignOptions options;
};

/// {"sim": plant, "real": plant, "init": {"kp_sim": [6], "kp_real": [6]}, "rounds": 3,
///  "options": {"popsize", "iters", "seed", "steps", "trans_amplitude", "rot_amplitude", ...}}
/// plant: {"inertia": [6] | x, "extra_damping": [6] | x, "delay_steps": n, "dt": s}
AlignSetup align_from_json(const json& j);
json align_result_json(const AlignResult& r);

/// {"defaults": true} or {"entries": [{"name", "unit", "scope": "episode"|"step", "range": [lo, hi]}]}
RandomizationConfig randomization_from_json(const json& j);
json randomization_to_json(const RandomizationConfig& cfg);

} // namespace tacsim

#endif
