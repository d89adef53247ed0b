// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "anchorsplat/io.hpp"
#include "anchorsplat/trajectory.hpp"
#include "oracles.hpp"

using namespace anchorsplat;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(ANCHORSPLAT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = oracle::read_bytes(out);
    r.err = oracle::read_bytes(err);
    return r;
}

json read_json(const fs::path& p) { return json::parse(oracle::read_bytes(p)); }

// 100 registered frames plus one unregistered file sorting between frames 49 and 50.
fs::path make_dataset(const fs::path& dir) {
    const auto model = oracle::video_model(3, 100, 400);
    validate_model(model);
    fs::create_directories(dir / "sparse");
    oracle::write_model_bytes(model, dir / "sparse");
    fs::create_directories(dir / "frames");
    for (const auto& [id, im] : model.images) {
        oracle::write_bytes(dir / "frames" / im.name, "");
    }
    oracle::write_bytes(dir / "frames" / "frame_0049b.png", "");
    return dir;
}

}  // namespace

TEST_CASE("ingest, sample and project a COLMAP video") {
    const auto dir = make_dataset(oracle::temp_dir("cli_pipeline"));
    const auto manifest = dir / "manifest.json";
    auto r = run("ingest --colmap-dir " + (dir / "sparse").string() + " --frames-dir " + (dir / "frames").string() +
                     " --video-id desk --out " + manifest.string(),
                 dir);
    REQUIRE(r.code == 0);
    const auto m = read_json(manifest);
    CHECK(m["video"]["frame_count"] == 101);
    CHECK(m["video"]["video_id"] == "desk");
    CHECK(m["counts"]["registered_frames"] == 100);
    CHECK(m["registered"][50] == false);
    CHECK(m["video"]["frame_names"][50] == "frame_0049b.png");
    CHECK(m["image_ids"][51] == 51);

    // Uniform windows at t0 = 0, 20, 40, 60, 80; the one at 40 hits frame 50.
    const auto clips = dir / "clips.jsonl";
    r = run("sample --manifest " + manifest.string() + " --dt 5 --eps 0 --n-context 3 --n-target 1 --seed 7 --out " +
                clips.string(),
            dir);
    REQUIRE(r.code == 0);
    const auto summary = json::parse(r.out);
    CHECK(summary["clips"] == 4);
    CHECK(summary["rejected_unregistered"] == 1);
    std::ifstream in(clips);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        const Clip c = clip_from_json_line(line);
        CHECK(satisfies_interpolation_rule(c));
        CHECK(c.context_indices.size() == 3);
        CHECK(c.target_indices.size() == 1);
        ++n;
    }
    CHECK(n == 4);

    // Perturbed sampling stays inside each window.
    r = run("sample --manifest " + manifest.string() + " --dt 10 --eps 4 --n-context 3 --n-target 1 --seed 7 --out " +
                (dir / "perturbed.jsonl").string(),
            dir);
    CHECK(r.code == 0);
    r = run("sample --manifest " + manifest.string() + " --dt 10 --eps 5 --out " + (dir / "x.jsonl").string(), dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("InvalidPerturbation") != std::string::npos);

    const auto out = dir / "clip0";
    r = run("project --manifest " + manifest.string() + " --clips " + clips.string() + " --clip 0 --out " + out.string(),
            dir);
    REQUIRE(r.code == 0);
    const auto model = load_model(dir / "sparse");
    std::ifstream cin(clips);
    std::getline(cin, line);
    const Clip clip = clip_from_json_line(line);
    // Frames before the inserted file map to image id = index + 1.
    const Pose ref = Pose::from_image(model.images.at(static_cast<std::uint32_t>(clip.context_indices[0] + 1)));
    for (std::size_t v = 0; v < clip.context_indices.size(); ++v) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "view_%03zu", v);
        const auto depth = read_depth_ply(out / (std::string(stem) + "_depth.ply"));
        const auto anchors = read_pointmap_ply(out / (std::string(stem) + "_anchor.ply"));
        CHECK(depth.width == 64);
        CHECK(depth.entries.size() > 20);
        const auto& im = model.images.at(static_cast<std::uint32_t>(clip.context_indices[v] + 1));
        const Pose pose = Pose::from_image(im);
        for (const auto& e : depth.entries) {
            const std::size_t idx = static_cast<std::size_t>(e.v * 64 + e.u);
            REQUIRE(anchors.views[0].valid[idx] == 1);
            const Eigen::Vector3d world = ref.inverse().apply(anchors.views[0].points[idx]);
            const Eigen::Vector3d h = oracle::homogeneous_project(model.cameras.at(1), pose, world);
            CHECK(h.x() == doctest::Approx(e.u).epsilon(1e-6));
            CHECK(h.y() == doctest::Approx(e.v).epsilon(1e-6));
            CHECK(h.z() == doctest::Approx(e.depth).epsilon(1e-9));
            // The stored point is the model point seen at that pixel.
            const auto& sp = model.points.at(e.point3d_id);
            const Eigen::Vector3d hp = oracle::homogeneous_project(model.cameras.at(1), pose, sp.position);
            CHECK(std::lround(hp.x()) == e.u);
            CHECK(hp.z() == doctest::Approx(e.depth).epsilon(1e-12));
        }
    }

    r = run("project --manifest " + manifest.string() + " --clips " + clips.string() + " --clip 9 --out " + out.string(),
            dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("UnknownClip") != std::string::npos);
}

TEST_CASE("gradcheck exit codes") {
    const auto dir = oracle::temp_dir("cli_grad");
    auto r = run("gradcheck --probes 16 --dump " + (dir / "dump.json").string(), dir);
    CHECK(r.code == 0);
    const auto dump = read_json(dir / "dump.json");
    CHECK(dump.contains("anchor"));
    CHECK(dump.contains("render"));
    CHECK(run("gradcheck --probes 16 --corrupt-gradient", dir).code == 1);
    r = run("gradcheck --probes 0", dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("InvalidConfig") != std::string::npos);
}

TEST_CASE("configuration handling") {
    const auto dir = oracle::temp_dir("cli_config");
    auto r = run("--print-config", dir);
    REQUIRE(r.code == 0);
    const auto cfg = json::parse(r.out);
    CHECK(cfg["anchor"]["alpha"] == 0.2);
    CHECK(cfg["mixing"]["enabled"] == false);
    oracle::write_bytes(dir / "bad.json", R"({"anchor": {"alhpa": 0.1}})");
    r = run("--config " + (dir / "bad.json").string() + " gradcheck", dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("anchor.alhpa") != std::string::npos);
    oracle::write_bytes(dir / "type.json", R"({"optimize": {"steps": "many"}})");
    CHECK(run("--config " + (dir / "type.json").string() + " gradcheck", dir).code == 2);
    CHECK(run("--config " + (dir / "missing.json").string() + " gradcheck", dir).code == 2);
    CHECK(run("no-such-command", dir).code == 2);
}

TEST_CASE("optimize, export and evaluate a small scene") {
    const auto dir = oracle::temp_dir("cli_opt");
    oracle::write_bytes(dir / "scene.json", R"({"n_context": 3, "n_target": 1, "height": 10, "width": 12, "seed": 4})");
    oracle::write_bytes(dir / "lenient.json", R"({"optimize": {"cd_gate": 10.0}})");
    auto r = run("--config " + (dir / "lenient.json").string() + " optimize --scene-spec " +
                     (dir / "scene.json").string() + " --steps 20 --out " + (dir / "trace.csv").string() +
                     " --report " + (dir / "report.json").string() + " --export-dir " + (dir / "export").string(),
                 dir);
    REQUIRE(r.code == 0);
    const std::string trace = oracle::read_bytes(dir / "trace.csv");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 21);
    const auto report = read_json(dir / "report.json");
    CHECK(report["cd_ratio"].get<double>() < 1.0);

    r = run("evaluate --pointmaps " + (dir / "export" / "final_pointmaps.ply").string() + " --gt " +
                (dir / "export" / "gt_pointmaps.ply").string() + " --out " + (dir / "eval.json").string(),
            dir);
    REQUIRE(r.code == 0);
    const auto eval = read_json(dir / "eval.json");
    CHECK(eval["chamfer"].get<double>() == doctest::Approx(report["final"]["chamfer"].get<double>()).epsilon(1e-9));

    oracle::write_bytes(dir / "strict.json", R"({"optimize": {"cd_gate": 0.0}})");
    r = run("--config " + (dir / "strict.json").string() + " optimize --scene-spec " + (dir / "scene.json").string() +
                " --steps 5 --out " + (dir / "t2.csv").string(),
            dir);
    CHECK(r.code == 1);
}
