#include "tacsim/scene.hpp"

#include <cmath>
#include <fstream>

namespace tacsim {

namespace fs = std::filesystem;

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

bool known_shape(const std::string& s) { return s == "cube" || s == "cylinder" || s == "moon" || s == "triangle"; }

double unit_factor(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("unit") || !j.contains("value"))
        throw InvalidArgument("scene: length field '" + field + "' needs {\"value\": ..., \"unit\": \"mm\"|\"m\"}");
    const std::string u = j.at("unit").get<std::string>();
    if (u == "mm") return 1e-3;
    if (u == "m") return 1.0;
    throw InvalidArgument("scene: field '" + field + "' has unknown unit '" + u + "' (expected mm or m)");
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

void Scene::validate() const {
    material.validate();
    solver.validate();
    script.validate();
    if (script.frames.size() < 2) throw InvalidArgument("scene '" + name + "': script needs a start pose and a frame");
    if (model != "ipc" && model != "mpm" && model != "penalty")
        throw InvalidArgument("scene '" + name + "': unknown model '" + model + "' (expected ipc|mpm|penalty)");
    if (marker_k < 1) throw InvalidArgument("scene '" + name + "': marker_k must be >= 1");
    if (!(observation_noise >= 0)) throw InvalidArgument("scene '" + name + "': observation_noise must be >= 0");
    if (indenter.mesh_path.empty() && !known_shape(indenter.shape))
        throw InvalidArgument("scene '" + name + "': unknown indenter shape '" + indenter.shape +
                              "' (expected cube|cylinder|moon|triangle)");
    if (!indenter.mesh_path.empty() && !fs::exists(indenter.mesh_path))
        throw InvalidArgument("scene '" + name + "': indenter mesh not found: " + indenter.mesh_path.string());
    if (!gel.mesh_path.empty() && !fs::exists(gel.mesh_path))
        throw InvalidArgument("scene '" + name + "': gel mesh not found: " + gel.mesh_path.string());
    if (mpm.cfg.ppc < 1 || !(mpm.move_speed > 0) || mpm.settle_steps < 0 || !(mpm.vmax > 0) ||
        !(mpm.dt_fraction > 0 && mpm.dt_fraction <= 1) || mpm.sdf_dims < 8)
        throw InvalidArgument("scene '" + name + "': invalid mpm parameters");
    penalty.params.validate();
    if (!(penalty.scale >= 0) || penalty.sdf_dims < 8)
        throw InvalidArgument("scene '" + name + "': invalid penalty parameters");
}

RigidScript make_indentation_script(const std::string& mode, const std::string& shape, double gap, double frame_dt) {
    if (!known_shape(shape))
        throw InvalidArgument("unknown indenter shape '" + shape + "' (expected cube|cylinder|moon|triangle)");
    if (!(gap > 0)) throw InvalidArgument("indentation start gap must be positive");
    if (!(frame_dt > 0)) throw InvalidArgument("frame interval must be positive");
    const double step = 1e-4;
    RigidScript s;
    auto add = [&](const Vec3& p, double angle_deg, bool observed) {
        RigidFrame f;
        f.time = static_cast<double>(s.frames.size()) * frame_dt;
        f.pose.position = p;
        f.pose.orientation = Quat(Eigen::AngleAxisd(angle_deg * kDegToRad, Vec3::UnitZ()));
        f.observed = observed;
        s.frames.push_back(f);
    };
    add(Vec3(0, 0, gap), 0.0, false);
    if (mode == "press") {
        for (int k = 1; k <= 10; ++k) add(Vec3(0, 0, -step * k), 0.0, true);
    } else if (mode == "slide" || mode == "rotate") {
        for (int k = 1; k <= 5; ++k) add(Vec3(0, 0, -step * k), 0.0, false);
        const Vec3 pre(0, 0, -5 * step);
        if (mode == "slide") {
            for (int k = 1; k <= 10; ++k) add(pre + Vec3(step * k, 0, 0), 0.0, true);
        } else {
            for (int k = 1; k <= 4; ++k) add(pre, 0.5 * k, true);
        }
    } else {
        throw InvalidArgument("unknown protocol mode '" + mode + "' (expected press|slide|rotate)");
    }
    return s;
}

Scene default_scene(const std::string& shape, const std::string& mode) {
    Scene s;
    s.name = shape + "_" + mode;
    s.indenter.shape = shape;
    s.script = make_indentation_script(mode, shape, s.solver.barrier.dhat);
    return s;
}

TetMesh build_pad(const PadSpec& spec) {
    if (!spec.mesh_path.empty()) return load_tet(spec.mesh_path, spec.mesh_scale);
    TetMesh pad = build_gel_pad(spec.extent, spec.resolution);
    const Vec3 shift(0.5 * spec.extent.x(), 0.5 * spec.extent.y(), spec.extent.z());
    for (auto& v : pad.vertices) v -= shift;
    return TetMesh::create(pad.vertices, pad.tets, pad.dirichlet);
}

SurfaceMesh build_indenter(const IndenterSpec& spec) {
    if (!spec.mesh_path.empty()) {
        SurfaceMesh m = load_obj(spec.mesh_path, spec.mesh_scale);
        require_watertight(m);
        return m;
    }
    return make_indenter(spec.shape, spec.size, spec.height);
}

double parse_length(const json& j, const std::string& field) {
    const double f = unit_factor(j, field);
    const double v = j.at("value").get<double>();
    if (!std::isfinite(v)) throw InvalidArgument("scene: length field '" + field + "' is not finite");
    return v * f;
}

Vec3 parse_length3(const json& j, const std::string& field) {
    const double f = unit_factor(j, field);
    const auto& v = j.at("value");
    if (!v.is_array() || v.size() != 3) throw InvalidArgument("scene: field '" + field + "' needs 3 values");
    return f * Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

json length_json(double meters) { return {{"value", meters}, {"unit", "m"}}; }
json length3_json(const Vec3& m) { return {{"value", {m.x(), m.y(), m.z()}}, {"unit", "m"}}; }

Scene scene_from_json(const json& j, const fs::path& base) {
    Scene s;
    try {
        get_if(j, "name", s.name);
        get_if(j, "model", s.model);
        get_if(j, "seed", s.seed);
        get_if(j, "marker_k", s.marker_k);
        if (j.contains("observation_noise")) s.observation_noise = parse_length(j["observation_noise"], "observation_noise");

        if (j.contains("gel")) {
            const auto& g = j["gel"];
            if (g.contains("mesh")) {
                s.gel.mesh_path = resolve(base, g["mesh"].get<std::string>());
                s.gel.mesh_scale = unit_factor(json{{"unit", g.value("unit", "m")}, {"value", 0}}, "gel.unit");
            }
            if (g.contains("extent")) s.gel.extent = parse_length3(g["extent"], "gel.extent");
            if (g.contains("resolution")) {
                const auto& r = g["resolution"];
                if (!r.is_array() || r.size() != 3) throw InvalidArgument("scene: gel.resolution needs 3 integers");
                s.gel.resolution = {r[0].get<int>(), r[1].get<int>(), r[2].get<int>()};
            }
        }
        if (j.contains("indenter")) {
            const auto& d = j["indenter"];
            get_if(d, "shape", s.indenter.shape);
            if (d.contains("size")) s.indenter.size = parse_length(d["size"], "indenter.size");
            if (d.contains("height")) s.indenter.height = parse_length(d["height"], "indenter.height");
            if (d.contains("mesh")) {
                s.indenter.mesh_path = resolve(base, d["mesh"].get<std::string>());
                s.indenter.mesh_scale = unit_factor(json{{"unit", d.value("unit", "m")}, {"value", 0}}, "indenter.unit");
            }
        }
        if (j.contains("material")) {
            const auto& m = j["material"];
            get_if(m, "E", s.material.E);
            get_if(m, "nu", s.material.nu);
            get_if(m, "rho", s.material.rho);
            get_if(m, "mu", s.material.mu_f);
        }
        if (j.contains("solver")) {
            const auto& c = j["solver"];
            get_if(c, "h", s.solver.h);
            get_if(c, "max_iters", s.solver.max_iters);
            get_if(c, "kappa", s.solver.barrier.kappa);
            get_if(c, "gravity", s.solver.gravity);
            get_if(c, "self_contact", s.solver.self_contact);
            get_if(c, "max_substeps", s.solver.max_substeps);
            if (c.contains("tol_dx")) s.solver.tol_dx = parse_length(c["tol_dx"], "solver.tol_dx");
            if (c.contains("dhat")) s.solver.barrier.dhat = parse_length(c["dhat"], "solver.dhat");
            if (c.contains("eps_v")) s.solver.friction.eps_v = parse_length(c["eps_v"], "solver.eps_v");
        }
        if (j.contains("script")) {
            for (const auto& f : j["script"].at("frames")) {
                RigidFrame fr;
                fr.time = f.at("time").get<double>();
                fr.pose.position = parse_length3(f.at("position"), "script.position");
                if (f.contains("quaternion")) {
                    const auto& q = f["quaternion"];
                    if (!q.is_array() || q.size() != 4) throw InvalidArgument("scene: quaternion needs [w, x, y, z]");
                    fr.pose.orientation = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
                }
                get_if(f, "observed", fr.observed);
                s.script.frames.push_back(fr);
            }
        } else {
            std::string mode = "press";
            double gap = s.solver.barrier.dhat, frame_dt = 0.1;
            if (j.contains("protocol")) {
                const auto& p = j["protocol"];
                get_if(p, "mode", mode);
                if (p.contains("gap")) gap = parse_length(p["gap"], "protocol.gap");
                get_if(p, "frame_dt", frame_dt);
            }
            s.script = make_indentation_script(mode, s.indenter.mesh_path.empty() ? s.indenter.shape : "cube", gap,
                                               frame_dt);
        }
        if (j.contains("mpm")) {
            const auto& m = j["mpm"];
            if (m.contains("dx")) s.mpm.cfg.dx = parse_length(m["dx"], "mpm.dx");
            if (m.contains("headroom")) s.mpm.cfg.headroom = parse_length(m["headroom"], "mpm.headroom");
            get_if(m, "ppc", s.mpm.cfg.ppc);
            get_if(m, "damping", s.mpm.cfg.damping);
            get_if(m, "move_speed", s.mpm.move_speed);
            get_if(m, "settle_steps", s.mpm.settle_steps);
            get_if(m, "vmax", s.mpm.vmax);
            get_if(m, "dt_fraction", s.mpm.dt_fraction);
            get_if(m, "sdf_dims", s.mpm.sdf_dims);
        }
        if (j.contains("penalty")) {
            const auto& p = j["penalty"];
            get_if(p, "k_n", s.penalty.params.k_n);
            get_if(p, "k_d", s.penalty.params.k_d);
            get_if(p, "k_t", s.penalty.params.k_t);
            get_if(p, "mu", s.penalty.params.mu);
            get_if(p, "kv_kappa", s.penalty.params.kv_kappa);
            get_if(p, "kv_c", s.penalty.params.kv_c);
            get_if(p, "scale", s.penalty.scale);
            get_if(p, "sdf_dims", s.penalty.sdf_dims);
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("scene: ") + e.what());
    }
    s.validate();
    return s;
}

json scene_to_json(const Scene& s) {
    json j;
    j["name"] = s.name;
    j["model"] = s.model;
    j["seed"] = s.seed;
    j["marker_k"] = s.marker_k;
    j["observation_noise"] = length_json(s.observation_noise);
    if (s.gel.mesh_path.empty()) {
        j["gel"] = {{"extent", length3_json(s.gel.extent)},
                    {"resolution", {s.gel.resolution[0], s.gel.resolution[1], s.gel.resolution[2]}}};
    } else {
        j["gel"] = {{"mesh", s.gel.mesh_path.string()}, {"unit", s.gel.mesh_scale == 1.0 ? "m" : "mm"}};
    }
    j["indenter"] = {{"shape", s.indenter.shape},
                     {"size", length_json(s.indenter.size)},
                     {"height", length_json(s.indenter.height)}};
    if (!s.indenter.mesh_path.empty()) {
        j["indenter"]["mesh"] = s.indenter.mesh_path.string();
        j["indenter"]["unit"] = s.indenter.mesh_scale == 1.0 ? "m" : "mm";
    }
    j["material"] = {{"E", s.material.E}, {"nu", s.material.nu}, {"rho", s.material.rho}, {"mu", s.material.mu_f}};
    j["solver"] = {{"h", s.solver.h},
                   {"max_iters", s.solver.max_iters},
                   {"kappa", s.solver.barrier.kappa},
                   {"gravity", s.solver.gravity},
                   {"self_contact", s.solver.self_contact},
                   {"max_substeps", s.solver.max_substeps},
                   {"tol_dx", length_json(s.solver.tol_dx)},
                   {"dhat", length_json(s.solver.barrier.dhat)},
                   {"eps_v", length_json(s.solver.friction.eps_v)}};
    json frames = json::array();
    for (const auto& f : s.script.frames) {
        const Quat& q = f.pose.orientation;
        frames.push_back({{"time", f.time},
                          {"position", length3_json(f.pose.position)},
                          {"quaternion", {q.w(), q.x(), q.y(), q.z()}},
                          {"observed", f.observed}});
    }
    j["script"] = {{"frames", frames}};
    j["mpm"] = {{"dx", length_json(s.mpm.cfg.dx)},
                {"headroom", length_json(s.mpm.cfg.headroom)},
                {"ppc", s.mpm.cfg.ppc},
                {"damping", s.mpm.cfg.damping},
                {"move_speed", s.mpm.move_speed},
                {"settle_steps", s.mpm.settle_steps},
                {"vmax", s.mpm.vmax},
                {"dt_fraction", s.mpm.dt_fraction},
                {"sdf_dims", s.mpm.sdf_dims}};
    j["penalty"] = {{"k_n", s.penalty.params.k_n},   {"k_d", s.penalty.params.k_d},
                    {"k_t", s.penalty.params.k_t},   {"mu", s.penalty.params.mu},
                    {"kv_kappa", s.penalty.params.kv_kappa}, {"kv_c", s.penalty.params.kv_c},
                    {"scale", s.penalty.scale},      {"sdf_dims", s.penalty.sdf_dims}};
    return j;
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument("malformed JSON in " + path.string() + ": " + e.what());
    }
}

Scene load_scene(const fs::path& path) { return scene_from_json(read_json_file(path), path.parent_path()); }

} // namespace tacsim
