// tacsim command-line front end. Every command writes under --out DIR and
// finishes with DIR/manifest.json. Exit codes: 0 ok, 2 invalid input, 3 solver failure.
#include "tacsim/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

using namespace tacsim;
namespace fs = std::filesystem;

namespace {

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::vector<fs::path> files;
    json summary = json::object();
};

void write_text(const fs::path& p, const std::string& text, Manifest& m) {
    std::ofstream out(p);
    if (!out) throw InvalidArgument("cannot write " + p.string());
    out << text;
    m.files.push_back(p);
}

void write_json(const fs::path& p, const json& j, Manifest& m) { write_text(p, j.dump(2) + "\n", m); }

fs::path parent_of(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

void finish(const fs::path& out, Manifest& m, int code, const std::string& error, double seconds) {
    json files = json::array();
    for (const auto& f : m.files) files.push_back(fs::relative(f, out).generic_string());
    json j = {{"command", m.command}, {"argv", m.argv},      {"exit_code", code},
              {"files", files},       {"summary", m.summary}, {"wall_seconds", seconds}};
    if (!error.empty()) j["error"] = error;
    std::ofstream(out / "manifest.json") << j.dump(2) << "\n";
}

int scene_outputs(const SceneResult& r, const fs::path& dir, double svg_gain, Manifest& m) {
    for (auto& f : write_scene_outputs(r, dir)) m.files.push_back(f);
    if (!r.fields.empty())
        write_text(dir / "final_field.svg", field_svg(r.fields.back(), svg_gain, r.name + " (" + r.model + ")"), m);
    m.summary = {{"scene", r.name},
                 {"model", r.model},
                 {"frames", r.fields.size()},
                 {"ok", r.ok},
                 {"wall_seconds", r.wall_seconds}};
    if (!r.ok) {
        m.summary["error"] = r.error;
        std::cerr << "error: " << r.error << "\n";
    }
    return r.exit_code;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tacsim: IPC tactile simulation, baselines and sim-to-real tools"};
    app.require_subcommand(1);
    app.fallthrough();
    fs::path out = "tacsim_out";
    app.add_option("--out", out, "output directory")->capture_default_str();

    fs::path input;
    std::string model, models = "ipc,mpm,penalty", shape = "cube", mode = "press";
    double svg_gain = 2e5;
    int workers = default_workers(), envs = 8, count = 1;
    std::uint64_t seed = 0;

    auto* simulate = app.add_subcommand("simulate", "run one scene file");
    simulate->add_option("scene", input, "scene JSON")->required();
    simulate->add_option("--model", model, "override the scene model (ipc|mpm|penalty)");
    simulate->add_option("--svg-gain", svg_gain, "arrow pixels per metre")->capture_default_str();

    auto* indent = app.add_subcommand("indent", "run a built-in indentation protocol");
    indent->add_option("--shape", shape, "cube|cylinder|moon|triangle")->capture_default_str();
    indent->add_option("--mode", mode, "press|slide|rotate")->capture_default_str();
    indent->add_option("--model", model, "ipc|mpm|penalty");
    indent->add_option("--svg-gain", svg_gain, "arrow pixels per metre")->capture_default_str();

    auto* batch = app.add_subcommand("batch", "run a batch spec on a worker pool");
    batch->add_option("spec", input, "batch JSON")->required();
    auto* batch_workers = batch->add_option("--workers", workers, "worker threads (default TACSIM_THREADS or cores)");

    auto* compare = app.add_subcommand("compare", "run one scene through several models");
    compare->add_option("scene", input, "scene JSON")->required();
    compare->add_option("--models", models, "comma separated list")->capture_default_str();
    compare->add_option("--svg-gain", svg_gain, "arrow pixels per metre")->capture_default_str();

    auto* calibrate = app.add_subcommand("calibrate", "CMA-ES material calibration");
    calibrate->add_option("problem", input, "calibration problem JSON")->required();

    auto* align = app.add_subcommand("align-control", "alternating controller gain alignment");
    align->add_option("plants", input, "plants JSON")->required();

    auto* randomize = app.add_subcommand("randomize", "sample domain randomization parameters");
    randomize->add_option("config", input, "randomization JSON")->required();
    randomize->add_option("--seed", seed, "base seed")->capture_default_str();
    randomize->add_option("--count", count, "number of samples")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "throughput of the benchmark scene");
    bench->add_option("--envs", envs, "number of environments")->capture_default_str();
    bench->add_option("--workers", workers, "worker threads")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Manifest man;
    man.command = app.get_subcommands().front()->get_name();
    for (int i = 1; i < argc; ++i) man.argv.emplace_back(argv[i]);

    const auto t0 = std::chrono::steady_clock::now();
    int code = 0;
    std::string error;
    try {
        fs::create_directories(out);
        if (*simulate) {
            Scene sc = load_scene(input);
            if (!model.empty()) sc.model = model;
            code = scene_outputs(run_scene(sc), out, svg_gain, man);
        } else if (*indent) {
            Scene sc = default_scene(shape, mode);
            if (!model.empty()) sc.model = model;
            write_json(out / "scene.json", scene_to_json(sc), man);
            code = scene_outputs(run_scene(sc), out, svg_gain, man);
        } else if (*batch) {
            BatchSpec spec = batch_from_json(read_json_file(input), parent_of(input));
            if (batch_workers->count() > 0 || !read_json_file(input).contains("workers")) spec.workers = workers;
            if (spec.output_dir.empty()) spec.output_dir = out / "scenes";
            const BatchSummary sum = batch_run(spec);
            for (const auto& e : sum.entries) {
                man.files.push_back(e.dir / "markers.csv");
                man.files.push_back(e.dir / "diagnostics.json");
            }
            write_json(out / "summary.json", sum.to_json(), man);
            man.summary = {{"scenes", sum.entries.size()}, {"failures", sum.failures}, {"fps", sum.fps}};
            std::printf("%zu scenes, %d failures, %.3f frames/s with %d workers\n", sum.entries.size(), sum.failures,
                        sum.fps, sum.workers);
            if (sum.failures > 0) code = 3;
        } else if (*compare) {
            const Scene sc = load_scene(input);
            const CompareReport rep = compare_models(sc, split_csv(models));
            write_json(out / "compare.json", rep.to_json(), man);
            for (std::size_t i = 0; i < rep.runs.size(); ++i) {
                const auto& r = rep.runs[i];
                const std::string tag = std::to_string(i) + "_" + r.model;
                std::ofstream csv(out / ("markers_" + tag + ".csv"));
                write_field_csv(csv, r.fields, r.model);
                man.files.push_back(out / ("markers_" + tag + ".csv"));
                if (!r.fields.empty())
                    write_text(out / ("final_" + tag + ".svg"), field_svg(r.fields.back(), svg_gain, sc.name + " " + r.model),
                               man);
                if (!r.ok) {
                    std::cerr << "error (" << r.model << "): " << r.error << "\n";
                    code = std::max(code, r.exit_code);
                }
            }
            man.summary = {{"models", rep.models}, {"frames", rep.mse.size()}};
        } else if (*calibrate) {
            const CalibrationSetup cs = calibration_from_json(read_json_file(input), parent_of(input));
            const CalibrationResult r = calibrate_material(cs.problem, cs.cmaes);
            json j = {{"E", r.material.E},         {"nu", r.material.nu},
                      {"rho", r.material.rho},     {"mu", r.material.mu_f},
                      {"loss", r.loss},            {"evaluations", r.evaluations},
                      {"loss_history", r.loss_history}};
            if (cs.theta_true) {
                const Material& t = *cs.theta_true;
                j["true"] = {{"E", t.E}, {"nu", t.nu}, {"rho", t.rho}, {"mu", t.mu_f}};
                j["relative_error"] = {{"E", std::abs(r.material.E - t.E) / t.E},
                                       {"mu", std::abs(r.material.mu_f - t.mu_f) / t.mu_f}};
            }
            write_json(out / "calibration.json", j, man);
            man.summary = {{"loss", r.loss}, {"evaluations", r.evaluations}};
            std::printf("E %.6g  nu %.4f  rho %.6g  mu %.4f  loss %.3e\n", r.material.E, r.material.nu, r.material.rho,
                        r.material.mu_f, r.loss);
        } else if (*align) {
            const AlignSetup a = align_from_json(read_json_file(input));
            const AlignResult r = alternate_align(a.sim, a.real, a.init, a.rounds, a.options);
            const json j = align_result_json(r);
            write_json(out / "alignment.json", j, man);
            man.summary = {{"final_trans_rms_mm", j["final_trans_rms_mm"]}, {"final_rot_rms_deg", j["final_rot_rms_deg"]}};
            std::printf("trans RMS %.4g mm  rot RMS %.4g deg\n", j["final_trans_rms_mm"].get<double>(),
                        j["final_rot_rms_deg"].get<double>());
        } else if (*randomize) {
            if (count < 0) throw InvalidArgument("randomize: --count must be >= 0");
            const RandomizationConfig cfg = randomization_from_json(read_json_file(input));
            // sample k uses seed + k
            std::string csv = "sample,name,unit,scope,value\n";
            json samples = json::array();
            for (int k = 0; k < count; ++k) {
                json one = json::object();
                for (const auto& s : sample_randomization(cfg, seed + static_cast<std::uint64_t>(k))) {
                    char buf[64];
                    std::snprintf(buf, sizeof buf, "%.9g", s.value);
                    csv += std::to_string(k) + "," + s.name + "," + s.unit + "," +
                           (s.scope == Scope::Episode ? "episode" : "step") + "," + buf + "\n";
                    one[s.name] = s.value;
                }
                samples.push_back(one);
            }
            write_text(out / "samples.csv", csv, man);
            write_json(out / "samples.json", {{"seed", seed}, {"samples", samples}}, man);
            man.summary = {{"count", count}};
        } else if (*bench) {
            if (envs < 0) throw InvalidArgument("bench: --envs must be >= 0");
            BatchSpec spec;
            spec.workers = workers;
            spec.scenes.assign(static_cast<std::size_t>(envs), bench_scene());
            const BatchSummary sum = batch_run(spec);
            // FPS: observed marker frames of all environments per wall-clock second.
            json j = sum.to_json();
            j["envs"] = envs;
            j["hardware_threads"] = std::thread::hardware_concurrency();
            write_json(out / "bench.json", j, man);
            man.summary = {{"envs", envs}, {"workers", workers}, {"fps", sum.fps}};
            std::printf("%d envs, %d workers: %.3f frames/s (%.2f s)\n", envs, workers, sum.fps, sum.wall_seconds);
            if (sum.failures > 0) code = 3;
        }
    } catch (const InvalidArgument& e) {
        code = 2;
        error = e.what();
    } catch (const json::exception& e) {
        code = 2;
        error = e.what();
    } catch (const std::exception& e) {
        code = 3;
        error = e.what();
    }
    if (!error.empty()) std::cerr << "error: " << error << "\n";
    try {
        finish(out, man, code, error, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    } catch (const std::exception& e) {
        std::cerr << "error: cannot write manifest: " << e.what() << "\n";
        if (code == 0) code = 2;
    }
    return code;
}
