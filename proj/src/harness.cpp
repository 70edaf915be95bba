#include "tacsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace tacsim {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rotation_angle(const Quat& a, const Quat& b) { return Eigen::AngleAxisd(b * a.inverse()).angle(); }

Twist pose_twist(const RigidPose& a, const RigidPose& b, double dt) {
    Twist tw;
    tw.head<3>() = (b.position - a.position) / dt;
    const Eigen::AngleAxisd aa(b.orientation * a.orientation.inverse());
    tw.tail<3>() = aa.axis() * aa.angle() / dt;
    return tw;
}

double shell_radius(const SurfaceMesh& shell) {
    double r = 0.0;
    for (const auto& v : shell.vertices) r = std::max(r, v.norm());
    return r;
}

double max_field_norm(const FieldSequence& seq) {
    double m = 0.0;
    for (const auto& f : seq) m = std::max(m, f.max_norm());
    return m;
}

void add_noise(FieldSequence& seq, double sigma, std::uint64_t seed) {
    if (sigma <= 0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& f : seq)
        for (auto& u : f.u) {
            u.x() += n(rng);
            u.y() += n(rng);
        }
}

MarkerMapping scene_markers(const TetMesh& pad, int k) { return init_marker_mapping(extract_surface(pad), pad.vertices, k); }

void run_ipc(const Scene& sc, const RunOptions& opt, SceneResult& res) {
    const TetMesh pad = build_pad(sc.gel);
    const ContactSimulator sim(pad, build_indenter(sc.indenter), sc.material, sc.solver);
    const MarkerMapping map = init_marker_mapping(sim.gel_surface(), pad.vertices, sc.marker_k);
    SimState st = sim.rest_state(sc.script.frames[0].pose);
    const VecX rest = st.x;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t f = 1; f < sc.script.frames.size(); ++f) {
        RigidScript one;
        one.frames = {sc.script.frames[f]};
        std::vector<StepStats> stats;
        st = sim.simulate_sequence(st, one, &stats, opt.observer).back();
        for (const auto& s : stats) {
            res.steps.push_back({static_cast<int>(f), s.iterations, s.converged, s.min_distance, s.active_contacts});
            dmin = std::min(dmin, s.min_distance);
        }
        if (!sc.script.frames[f].observed) continue;
        MarkerField mf = marker_displacements(map, st.x, rest);
        mf.frame_id = static_cast<int>(f);
        mf.timestamp = sc.script.frames[f].time;
        res.fields.push_back(std::move(mf));
    }
    res.extra["min_distance"] = dmin;
}

void run_mpm(const Scene& sc, SceneResult& res) {
    const TetMesh pad = build_pad(sc.gel);
    const SurfaceMesh shell = build_indenter(sc.indenter);
    const MarkerMapping map = scene_markers(pad, sc.marker_k);
    Vec3 lo = pad.vertices[0], hi = lo;
    for (const auto& v : pad.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    MpmConfig cfg = sc.mpm.cfg;
    if (cfg.headroom <= 0) cfg.headroom = 0.25 * (hi.z() - lo.z());
    MpmState ms = mpm_init(lo, hi, sc.material, cfg, map.marker_rest, map.sensor_frame);
    const SdfGrid sdf = build_sdf_grid(shell, {sc.mpm.sdf_dims, sc.mpm.sdf_dims, sc.mpm.sdf_dims}, 2.0 * ms.dx);
    const double dt = sc.mpm.dt_fraction * mpm_max_dt(ms.dx, sc.material);
    const double radius = shell_radius(shell);
    double mass_err = 0.0;
    int guards = 0, total = 0;
    RigidPose prev = sc.script.frames[0].pose;
    for (std::size_t f = 1; f < sc.script.frames.size(); ++f) {
        const RigidPose next = sc.script.frames[f].pose;
        const double travel = (next.position - prev.position).norm() + radius * rotation_angle(prev.orientation, next.orientation);
        const int n = std::max(1, static_cast<int>(std::ceil(travel / (sc.mpm.move_speed * dt))));
        const Twist tw = pose_twist(prev, next, n * dt);
        for (int i = 0; i < n + sc.mpm.settle_steps; ++i) {
            MpmCollider col;
            col.sdf = &sdf;
            col.pose = i < n ? interpolate(prev, next, static_cast<double>(i + 1) / n) : next;
            if (i < n) {
                col.linear = tw.head<3>();
                col.angular = tw.tail<3>();
            }
            mpm_step(ms, dt, sc.material, col, cfg.damping);
            const double pm = mpm_particle_mass(ms);
            mass_err = std::max(mass_err, std::abs(mpm_grid_mass(ms) - pm) / pm);
            if (mpm_explosion_guard(ms, sc.mpm.vmax)) ++guards;
            ++total;
        }
        prev = next;
        if (!sc.script.frames[f].observed) continue;
        MarkerField mf = mpm_marker_field(ms, ms.markers);
        mf.frame_id = static_cast<int>(f);
        mf.timestamp = sc.script.frames[f].time;
        res.fields.push_back(std::move(mf));
    }
    res.extra["particles"] = ms.x.size();
    res.extra["dt"] = dt;
    res.extra["steps"] = total;
    res.extra["mass_rel_error_max"] = mass_err;
    res.extra["guard_triggers"] = guards;
}

void run_penalty(const Scene& sc, const RunOptions& opt, SceneResult& res) {
    const TetMesh pad = build_pad(sc.gel);
    const SurfaceMesh shell = build_indenter(sc.indenter);
    const MarkerMapping map = scene_markers(pad, sc.marker_k);
    const SdfGrid sdf =
        build_sdf_grid(shell, {sc.penalty.sdf_dims, sc.penalty.sdf_dims, sc.penalty.sdf_dims}, 0.25 * sc.indenter.size);
    const TactilePointSet base = make_tactile_points(map);
    std::vector<TactilePointSet> sets;
    std::vector<int> frame_ids;
    int skipped = 0;
    double cone_excess = 0.0;
    for (std::size_t f = 1; f < sc.script.frames.size(); ++f) {
        const auto& a = sc.script.frames[f - 1];
        const auto& b = sc.script.frames[f];
        auto ps = penalty_tactile(base, sdf, b.pose, pose_twist(a.pose, b.pose, b.time - a.time), sc.penalty.params);
        for (std::size_t i = 0; i < ps.points.size(); ++i) {
            skipped += ps.skipped[i];
            cone_excess = std::max(cone_excess, ps.f_t[i].norm() - sc.penalty.params.mu * ps.f_n[i].norm());
        }
        if (!b.observed) continue;
        sets.push_back(std::move(ps));
        frame_ids.push_back(static_cast<int>(f));
    }
    double scale = sc.penalty.scale;
    if (scale <= 0) {
        double ref_max;
        if (opt.ipc_reference) {
            ref_max = max_field_norm(*opt.ipc_reference);
        } else {
            Scene ref = sc;
            ref.model = "ipc";
            ref.observation_noise = 0.0;
            SceneResult rr;
            run_ipc(ref, {}, rr);
            ref_max = max_field_norm(rr.fields);
        }
        scale = penalty_normalization(sets, ref_max);
    }
    for (std::size_t k = 0; k < sets.size(); ++k) {
        MarkerField mf = force_to_pseudo_displacement(sets[k], scale);
        mf.frame_id = frame_ids[k];
        mf.timestamp = sc.script.frames[static_cast<std::size_t>(frame_ids[k])].time;
        res.fields.push_back(std::move(mf));
    }
    res.extra["scale"] = scale;
    res.extra["skipped_points"] = skipped;
    res.extra["coulomb_excess_max"] = cone_excess;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

SceneResult run_scene(const Scene& sc, const RunOptions& opt) {
    SceneResult res;
    res.name = sc.name;
    res.model = sc.model;
    const auto t0 = Clock::now();
    try {
        sc.validate();
        if (sc.model == "ipc") run_ipc(sc, opt, res);
        else if (sc.model == "mpm") run_mpm(sc, res);
        else run_penalty(sc, opt, res);
        add_noise(res.fields, sc.observation_noise, sc.seed);
    } catch (const InvalidArgument& e) {
        res.ok = false;
        res.exit_code = 2;
        res.error = e.what();
    } catch (const std::exception& e) {
        res.ok = false;
        res.exit_code = 3;
        res.error = e.what();
    }
    res.wall_seconds = seconds_since(t0);
    return res;
}

json diagnostics_json(const SceneResult& r) {
    json steps = json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"frame", s.frame},
                         {"iterations", s.iterations},
                         {"converged", s.converged},
                         {"min_distance", s.min_distance},
                         {"active_contacts", s.active_contacts}});
    json j = {{"scene", r.name},   {"model", r.model},         {"ok", r.ok},
              {"frames", r.fields.size()}, {"wall_seconds", r.wall_seconds}, {"steps", steps},
              {"model_diagnostics", r.extra}};
    if (!r.ok) j["error"] = {{"message", r.error}, {"exit_code", r.exit_code}};
    return j;
}

std::vector<fs::path> write_scene_outputs(const SceneResult& r, const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path csv = dir / "markers.csv", diag = dir / "diagnostics.json";
    {
        std::ofstream out(csv);
        write_field_csv(out, r.fields, r.model);
    }
    {
        std::ofstream out(diag);
        out << diagnostics_json(r).dump(2) << "\n";
    }
    return {csv, diag};
}

int default_workers() {
    if (const char* env = std::getenv("TACSIM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

BatchSpec batch_from_json(const json& j, const fs::path& base) {
    BatchSpec spec;
    try {
        spec.workers = j.value("workers", default_workers());
        if (j.contains("output_dir")) {
            fs::path p = j["output_dir"].get<std::string>();
            spec.output_dir = p.is_absolute() || base.empty() ? p : base / p;
        }
        const int copies = j.value("copies", 1);
        if (copies < 1) throw InvalidArgument("batch: copies must be >= 1");
        std::vector<Scene> scenes;
        for (const auto& s : j.at("scenes")) {
            if (s.is_string()) {
                fs::path p = s.get<std::string>();
                scenes.push_back(load_scene(p.is_absolute() || base.empty() ? p : base / p));
            } else {
                scenes.push_back(scene_from_json(s, base));
            }
        }
        for (int c = 0; c < copies; ++c)
            for (const auto& s : scenes) spec.scenes.push_back(s);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("batch: ") + e.what());
    }
    if (spec.workers < 1) throw InvalidArgument("batch: workers must be >= 1");
    return spec;
}

std::string scene_dir_name(std::size_t index, const std::string& name) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04zu_", index);
    std::string safe;
    for (char c : name) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return buf + safe;
}

json BatchSummary::to_json() const {
    json es = json::array();
    for (const auto& e : entries) {
        json x = {{"name", e.name}, {"ok", e.ok}, {"wall_seconds", e.wall_seconds}, {"frames", e.frames}};
        if (!e.dir.empty()) x["dir"] = e.dir.string();
        if (!e.ok) x["error"] = e.error;
        es.push_back(x);
    }
    return {{"scenes", es}, {"workers", workers}, {"wall_seconds", wall_seconds}, {"fps", fps}, {"failures", failures}};
}

BatchSummary batch_run(const BatchSpec& spec, std::vector<SceneResult>* results) {
    if (spec.workers < 1) throw InvalidArgument("batch: workers must be >= 1");
    BatchSummary sum;
    sum.workers = spec.workers;
    const std::size_t n = spec.scenes.size();
    std::vector<SceneResult> out(n);
    const auto t0 = Clock::now();
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) out[i] = run_scene(spec.scenes[i]);
    };
    const int w = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(spec.workers), std::max<std::size_t>(n, 1)));
    if (w <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < w; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    sum.wall_seconds = seconds_since(t0);
    int frames = 0;
    for (std::size_t i = 0; i < n; ++i) {
        BatchEntry e;
        e.name = out[i].name;
        e.ok = out[i].ok;
        e.error = out[i].error;
        e.wall_seconds = out[i].wall_seconds;
        e.frames = static_cast<int>(out[i].fields.size());
        if (!spec.output_dir.empty()) {
            e.dir = spec.output_dir / scene_dir_name(i, out[i].name);
            write_scene_outputs(out[i], e.dir);
        }
        frames += e.frames;
        sum.failures += e.ok ? 0 : 1;
        sum.entries.push_back(std::move(e));
    }
    sum.fps = sum.wall_seconds > 0 ? frames / sum.wall_seconds : 0.0;
    if (results) *results = std::move(out);
    return sum;
}

json CompareReport::to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json runs_j = json::array();
    for (const auto& r : runs) {
        json x = {{"model", r.model}, {"ok", r.ok}, {"frames", r.fields.size()}, {"wall_seconds", r.wall_seconds},
                  {"diagnostics", r.extra}};
        if (!r.ok) x["error"] = r.error;
        runs_j.push_back(x);
    }
    json mse_j = json::array();
    for (const auto& m : mse) {
        json fm = json::array();
        for (const auto& row : m) {
            json rj = json::array();
            for (double v : row) rj.push_back(num(v));
            fm.push_back(rj);
        }
        mse_j.push_back(fm);
    }
    json maxu = json::object();
    for (std::size_t i = 0; i < models.size(); ++i) {
        json c = json::array();
        for (double v : max_u[i]) c.push_back(num(v));
        maxu[models[i] + (std::count(models.begin(), models.begin() + static_cast<long>(i), models[i]) ? "#" + std::to_string(i) : "")] = c;
    }
    return {{"models", models}, {"runs", runs_j}, {"mse_per_frame", mse_j}, {"max_u", maxu}};
}

CompareReport compare_models(const Scene& base, const std::vector<std::string>& models) {
    if (models.size() < 2) throw InvalidArgument("compare: need at least 2 models");
    CompareReport rep;
    rep.models = models;
    rep.runs.resize(models.size());
    const FieldSequence* ipc_ref = nullptr;
    // ipc runs first so penalty normalization can reuse its fields.
    std::vector<std::size_t> order(models.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_partition(order.begin(), order.end(), [&](std::size_t i) { return models[i] == "ipc"; });
    for (std::size_t i : order) {
        Scene s = base;
        s.model = models[i];
        RunOptions opt;
        opt.ipc_reference = ipc_ref;
        rep.runs[i] = run_scene(s, opt);
        if (models[i] == "ipc" && rep.runs[i].ok && !ipc_ref) ipc_ref = &rep.runs[i].fields;
    }
    std::size_t frames = 0;
    for (const auto& r : rep.runs) frames = std::max(frames, r.fields.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.mse.assign(frames, std::vector<std::vector<double>>(models.size(), std::vector<double>(models.size(), nan)));
    rep.max_u.assign(models.size(), std::vector<double>(frames, nan));
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t i = 0; i < models.size(); ++i) {
            if (f < rep.runs[i].fields.size()) rep.max_u[i][f] = rep.runs[i].fields[f].max_norm();
            for (std::size_t j = 0; j < models.size(); ++j) {
                if (f < rep.runs[i].fields.size() && f < rep.runs[j].fields.size())
                    rep.mse[f][i][j] = frame_sq_error(rep.runs[i].fields[f], rep.runs[j].fields[f]);
            }
        }
    }
    return rep;
}

std::string field_svg(const MarkerField& f, double gain, const std::string& title) {
    const double pitch = 60.0, margin = 50.0;
    const double w = 2 * margin + pitch * (kMarkerCols - 1), h = 2 * margin + pitch * (kMarkerRows - 1) + 20;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(h) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << fmt(margin) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
       << "</text>\n";
    for (int r = 0; r < kMarkerRows; ++r) {
        for (int c = 0; c < kMarkerCols; ++c) {
            // row 0 at the bottom so +y points up
            const double x0 = margin + pitch * c, y0 = h - margin - pitch * r;
            const Vec2 u = f.at(r, c) * gain;
            const double x1 = x0 + u.x(), y1 = y0 - u.y();
            os << "<circle cx=\"" << fmt(x0) << "\" cy=\"" << fmt(y0) << "\" r=\"2\" fill=\"gray\"/>\n";
            os << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(y1)
               << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
            const double len = u.norm();
            if (len > 4.0) {
                const Vec2 d(u.x() / len, -u.y() / len), nrm(-d.y(), d.x());
                const Vec2 tip(x1, y1), a = tip - 6.0 * d + 3.0 * nrm, b = tip - 6.0 * d - 3.0 * nrm;
                os << "<polygon points=\"" << fmt(tip.x()) << "," << fmt(tip.y()) << " " << fmt(a.x()) << ","
                   << fmt(a.y()) << " " << fmt(b.x()) << "," << fmt(b.y()) << "\" fill=\"black\"/>\n";
            }
        }
    }
    os << "</svg>\n";
    return os.str();
}

Scene bench_scene() {
    Scene s;
    s.name = "bench_cube_press";
    s.gel.extent = Vec3(0.008, 0.006, 0.003);
    s.gel.resolution = {8, 6, 3};
    s.indenter.shape = "cube";
    s.indenter.size = 0.003;
    s.indenter.height = 0.002;
    s.script = make_indentation_script("press", "cube", s.solver.barrier.dhat);
    // 0.05 mm increments keep the strain moderate on the thin pad
    for (std::size_t f = 1; f < s.script.frames.size(); ++f) s.script.frames[f].pose.position.z() *= 0.5;
    return s;
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void get_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

Vec6 vec6_json(const json& j, const char* field) {
    if (j.is_number()) return Vec6::Constant(j.get<double>());
    if (!j.is_array() || j.size() != 6) throw InvalidArgument(std::string(field) + ": expected a number or 6 numbers");
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json vec6_to_json(const Vec6& v) { return std::vector<double>(v.data(), v.data() + 6); }

PlantModel plant_json(const json& j) {
    PlantModel p;
    if (j.contains("inertia")) p.inertia = vec6_json(j["inertia"], "inertia");
    if (j.contains("extra_damping")) p.extra_damping = vec6_json(j["extra_damping"], "extra_damping");
    get_opt(j, "delay_steps", p.delay_steps);
    get_opt(j, "dt", p.dt);
    p.validate();
    return p;
}

} // namespace

std::vector<FieldSequence> simulate_scenes(const std::vector<Scene>& scenes, const Material& m) {
    std::vector<FieldSequence> out;
    out.reserve(scenes.size());
    for (Scene s : scenes) {
        s.material = m;
        SceneResult r = run_scene(s);
        if (!r.ok) throw SolverError("scene " + s.name + ": " + r.error);
        out.push_back(std::move(r.fields));
    }
    return out;
}

CalibrationSetup calibration_from_json(const json& j, const fs::path& base) {
    CalibrationSetup cs;
    try {
        for (const auto& s : j.at("scenes")) {
            if (s.is_string()) {
                fs::path p = s.get<std::string>();
                cs.scenes.push_back(load_scene(p.is_absolute() || base.empty() ? p : base / p));
            } else {
                cs.scenes.push_back(scene_from_json(s, base));
            }
        }
        if (cs.scenes.empty()) throw InvalidArgument("calibration: no scenes");
        if (j.contains("bounds")) {
            const auto& b = j["bounds"];
            const auto lo = b.at("lo").get<std::vector<double>>(), hi = b.at("hi").get<std::vector<double>>();
            if (lo.size() != 4 || hi.size() != 4) throw InvalidArgument("calibration: bounds need 4 entries");
            cs.problem.lo = Eigen::Map<const VecX>(lo.data(), 4);
            cs.problem.hi = Eigen::Map<const VecX>(hi.data(), 4);
        }
        if (j.contains("cmaes")) {
            const auto& c = j["cmaes"];
            get_opt(c, "popsize", cs.cmaes.popsize);
            get_opt(c, "iters", cs.cmaes.iters);
            get_opt(c, "seed", cs.cmaes.seed);
            get_opt(c, "sigma0", cs.cmaes.sigma0);
            get_opt(c, "ftarget", cs.cmaes.ftarget);
            get_opt(c, "workers", cs.cmaes.workers);
        }
        const auto& ref = j.at("reference");
        if (ref.contains("material")) {
            Material m;
            const auto& mj = ref["material"];
            m.E = mj.at("E").get<double>();
            m.nu = mj.at("nu").get<double>();
            m.rho = mj.at("rho").get<double>();
            m.mu_f = mj.at("mu").get<double>();
            m.validate();
            const VecX th = material_to_theta(m);
            for (int i = 0; i < 4; ++i)
                if (th[i] < cs.problem.lo[i] || th[i] > cs.problem.hi[i])
                    throw InvalidArgument("calibration: reference material outside the bounds");
            cs.theta_true = m;
            cs.problem.reference = simulate_scenes(cs.scenes, m);
        } else {
            for (const auto& f : ref.at("csv")) {
                fs::path p = f.get<std::string>();
                std::ifstream in(p.is_absolute() || base.empty() ? p : base / p);
                if (!in) throw InvalidArgument("calibration: cannot open " + p.string());
                cs.problem.reference.push_back(read_field_csv(in));
            }
            if (cs.problem.reference.size() != cs.scenes.size())
                throw InvalidArgument("calibration: one reference csv per scene required");
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("calibration: ") + e.what());
    }
    const auto scenes = cs.scenes;
    cs.problem.simulate = [scenes](const Material& m) { return simulate_scenes(scenes, m); };
    cs.problem.validate();
    return cs;
}

AlignSetup align_from_json(const json& j) {
    AlignSetup a;
    try {
        if (j.contains("sim")) a.sim = plant_json(j["sim"]);
        if (j.contains("real")) a.real = plant_json(j["real"]);
        if (j.contains("init")) {
            const auto& i = j["init"];
            if (i.contains("kp_sim")) a.init.kp_sim = vec6_json(i["kp_sim"], "kp_sim");
            if (i.contains("kp_real")) a.init.kp_real = vec6_json(i["kp_real"], "kp_real");
        }
        get_opt(j, "rounds", a.rounds);
        if (j.contains("options")) {
            const auto& o = j["options"];
            get_opt(o, "popsize", a.options.popsize);
            get_opt(o, "iters", a.options.iters);
            get_opt(o, "seed", a.options.seed);
            get_opt(o, "steps", a.options.profile.steps);
            get_opt(o, "trans_amplitude", a.options.profile.trans_amplitude);
            get_opt(o, "rot_amplitude", a.options.profile.rot_amplitude);
            get_opt(o, "trans_scale_mm", a.options.trans_scale_mm);
            get_opt(o, "rot_scale_deg", a.options.rot_scale_deg);
            if (o.contains("kp_lo")) a.options.kp_lo = vec6_json(o["kp_lo"], "kp_lo");
            if (o.contains("kp_hi")) a.options.kp_hi = vec6_json(o["kp_hi"], "kp_hi");
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("align: ") + e.what());
    }
    if (a.rounds < 1) throw InvalidArgument("align: rounds must be >= 1");
    return a;
}

json align_result_json(const AlignResult& r) {
    json hist = json::array();
    for (std::size_t i = 0; i < r.gain_history.size(); ++i) {
        hist.push_back({{"kp_sim", vec6_to_json(r.gain_history[i].kp_sim)},
                        {"kp_real", vec6_to_json(r.gain_history[i].kp_real)},
                        {"trans_rms_mm", r.trans_rms_history[i]},
                        {"rot_rms_deg", r.rot_rms_history[i]},
                        {"objective", r.objective_history[i]}});
    }
    return {{"kp_sim", vec6_to_json(r.gains.kp_sim)},
            {"kp_real", vec6_to_json(r.gains.kp_real)},
            {"final_trans_rms_mm", r.trans_rms_history.empty() ? 0.0 : r.trans_rms_history.back()},
            {"final_rot_rms_deg", r.rot_rms_history.empty() ? 0.0 : r.rot_rms_history.back()},
            {"history", hist}};
}

RandomizationConfig randomization_from_json(const json& j) {
    if (j.value("defaults", false)) return RandomizationConfig::defaults();
    RandomizationConfig cfg;
    try {
        for (const auto& e : j.at("entries")) {
            RandomizationEntry r;
            r.name = e.at("name").get<std::string>();
            r.unit = e.value("unit", "");
            const std::string scope = e.value("scope", "episode");
            if (scope == "episode") r.scope = Scope::Episode;
            else if (scope == "step") r.scope = Scope::Step;
            else throw InvalidArgument("randomization: unknown scope '" + scope + "'");
            const auto range = e.at("range").get<std::vector<double>>();
            if (range.size() != 2) throw InvalidArgument("randomization: range needs [lo, hi]");
            r.range = {range[0], range[1]};
            cfg.entries.push_back(r);
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("randomization: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json randomization_to_json(const RandomizationConfig& cfg) {
    json es = json::array();
    for (const auto& e : cfg.entries)
        es.push_back({{"name", e.name},
                      {"unit", e.unit},
                      {"scope", e.scope == Scope::Episode ? "episode" : "step"},
                      {"range", {e.range.lo, e.range.hi}}});
    return {{"entries", es}};
}

} // namespace tacsim
