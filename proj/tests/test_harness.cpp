#include "tacsim/harness.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace tacsim;
namespace fs = std::filesystem;

namespace {

Scene tiny_scene(const std::string& name = "tiny") {
    Scene s = default_scene("cube", "press");
    s.name = name;
    s.gel.extent = Vec3(0.006, 0.005, 0.002);
    s.gel.resolution = {4, 3, 2};
    s.indenter.size = 0.003;
    s.indenter.height = 0.002;
    s.script.frames.resize(4); // start + three 0.1 mm frames
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Scripts, ProtocolInvariants) {
    for (const std::string shape : {"cube", "cylinder", "moon", "triangle"}) {
        const RigidScript press = make_indentation_script("press", shape);
        ASSERT_EQ(press.frames.size(), 11u);
        EXPECT_FALSE(press.frames[0].observed);
        EXPECT_NEAR(press.frames.back().pose.position.z(), -1e-3, 1e-15);
        const RigidScript rot = make_indentation_script("rotate", shape);
        int observed = 0;
        for (const auto& f : rot.frames) observed += f.observed;
        EXPECT_EQ(observed, 4);
        EXPECT_NEAR(Eigen::AngleAxisd(rot.frames.back().pose.orientation).angle(), 2.0 * M_PI / 180.0, 1e-12);
        for (const std::string mode : {"press", "slide", "rotate"}) {
            const RigidScript s = make_indentation_script(mode, shape);
            EXPECT_NO_THROW(s.validate());
            // 0.1 mm increments after the first move, which also closes the start gap.
            EXPECT_LE((s.frames[1].pose.position - s.frames[0].pose.position).norm(), 2e-4 + 1e-15);
            for (std::size_t i = 2; i < s.frames.size(); ++i)
                EXPECT_LE((s.frames[i].pose.position - s.frames[i - 1].pose.position).norm(), 1e-4 + 1e-15);
        }
    }
    EXPECT_THROW(make_indentation_script("twist", "cube"), InvalidArgument);
    EXPECT_THROW(make_indentation_script("press", "sphere"), InvalidArgument);
}

TEST(SceneJson, RoundTripAndUnits) {
    const Scene s = default_scene("moon", "slide");
    const json j = scene_to_json(s);
    const Scene r = scene_from_json(j);
    EXPECT_EQ(scene_to_json(r).dump(), j.dump());
    EXPECT_EQ(r.script.frames.size(), s.script.frames.size());
    EXPECT_DOUBLE_EQ(parse_length(json{{"value", 2.5}, {"unit", "mm"}}, "x"), 2.5e-3);
    EXPECT_DOUBLE_EQ(parse_length(json{{"value", 2.5}, {"unit", "m"}}, "x"), 2.5);
    EXPECT_THROW(parse_length(json{{"value", 2.5}, {"unit", "in"}}, "x"), InvalidArgument);
    EXPECT_THROW(parse_length(json(2.5), "x"), InvalidArgument);
    json bad = j;
    bad["indenter"]["shape"] = "sphere";
    EXPECT_THROW(scene_from_json(bad), InvalidArgument);
    // Bundled scenes match the built-in defaults.
    const Scene f = load_scene(fs::path(TACSIM_DATA_DIR) / "scenes" / "cube_slide.json");
    EXPECT_EQ(scene_to_json(f).dump(), scene_to_json(default_scene("cube", "slide")).dump());
}

TEST(Run, DeterministicOutputs) {
    const Scene s = tiny_scene();
    const SceneResult a = run_scene(s), b = run_scene(s);
    ASSERT_TRUE(a.ok) << a.error;
    ASSERT_EQ(a.fields.size(), 3u);
    EXPECT_GT(a.fields.back().max_norm(), 0.0);
    const fs::path d = fs::temp_directory_path() / "tacsim_test_run";
    fs::remove_all(d);
    write_scene_outputs(a, d / "a");
    write_scene_outputs(b, d / "b");
    EXPECT_EQ(slurp(d / "a" / "markers.csv"), slurp(d / "b" / "markers.csv"));
    EXPECT_FALSE(slurp(d / "a" / "markers.csv").empty());
    fs::remove_all(d);
}

TEST(Run, InvalidInputExitCode) {
    Scene s = tiny_scene();
    s.material.nu = 0.6;
    const SceneResult r = run_scene(s);
    EXPECT_FALSE(r.ok);
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_FALSE(r.error.empty());
}

TEST(Batch, WorkerCountDoesNotChangeResults) {
    BatchSpec spec;
    for (int i = 0; i < 3; ++i) spec.scenes.push_back(tiny_scene("tiny" + std::to_string(i)));
    spec.scenes[1].script.frames.resize(3);
    std::vector<SceneResult> r1, r2;
    spec.workers = 1;
    const BatchSummary s1 = batch_run(spec, &r1);
    spec.workers = 2;
    const BatchSummary s2 = batch_run(spec, &r2);
    EXPECT_EQ(s1.failures, 0);
    ASSERT_EQ(r1.size(), 3u);
    ASSERT_EQ(r2.size(), 3u);
    for (std::size_t i = 0; i < r1.size(); ++i) {
        EXPECT_EQ(r1[i].name, spec.scenes[i].name);
        EXPECT_EQ(r2[i].name, spec.scenes[i].name);
        EXPECT_EQ(field_mse(r1[i].fields, r2[i].fields), 0.0);
        EXPECT_EQ(s1.entries[i].frames, static_cast<int>(r1[i].fields.size()));
    }
    EXPECT_GT(s1.fps, 0.0);
    EXPECT_EQ(scene_dir_name(7, "a b/c"), "0007_a_b_c");

    const BatchSummary empty = batch_run(BatchSpec{});
    EXPECT_TRUE(empty.entries.empty());
    EXPECT_EQ(empty.failures, 0);
    EXPECT_EQ(empty.fps, 0.0);
}

TEST(Compare, IdenticalModelsHaveZeroError) {
    const CompareReport rep = compare_models(tiny_scene(), {"ipc", "ipc"});
    ASSERT_EQ(rep.runs.size(), 2u);
    ASSERT_FALSE(rep.mse.empty());
    for (const auto& frame : rep.mse) EXPECT_EQ(frame[0][1], 0.0);
    EXPECT_EQ(rep.max_u[0], rep.max_u[1]);
    const json j = rep.to_json();
    EXPECT_TRUE(j.contains("models"));
}

TEST(Svg, WellFormed) {
    MarkerField f;
    f.u[10] = Vec2(1e-4, -2e-4);
    const std::string svg = field_svg(f, 2e5, "t");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
