// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "anchorsplat/colmap_io.hpp"
#include "anchorsplat/error.hpp"
#include "anchorsplat/geometry.hpp"
#include "anchorsplat/gradcheck.hpp"
#include "anchorsplat/harness.hpp"
#include "anchorsplat/io.hpp"
#include "anchorsplat/metrics.hpp"
#include "anchorsplat/trajectory.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace anchorsplat;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGate = 1;
constexpr int kExitInput = 2;

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
    }
}

void report_error(const std::string& code, const std::string& message) {
    json j;
    j["error"] = code;
    j["message"] = message;
    std::cerr << j.dump() << '\n';
}

// -- ingest ---------------------------------------------------------------------

struct IngestArgs {
    std::string colmap_dir;
    std::string frames_dir;
    std::string out;
    std::string video_id = "video";
};

int cmd_ingest(const IngestArgs& a, const cli::RunConfig& cfg) {
    std::vector<std::string> warnings;
    const SparseModel model = load_model(a.colmap_dir, ModelFormat::Auto, &warnings);
    validate_model(model, &warnings);

    std::vector<std::string> frames;
    if (!a.frames_dir.empty()) {
        if (!fs::is_directory(a.frames_dir)) {
            throw Error(ErrorCode::MissingFile, "frames directory not found: " + a.frames_dir);
        }
        for (const auto& e : fs::directory_iterator(a.frames_dir)) {
            if (e.is_regular_file()) {
                frames.push_back(e.path().filename().string());
            }
        }
    } else {
        for (const auto& [id, image] : model.images) {
            frames.push_back(image.name);
        }
    }
    std::sort(frames.begin(), frames.end());

    json video;
    video["video_id"] = a.video_id;
    video["frame_count"] = frames.size();
    video["fps"] = cfg.sampling.fps;
    std::uint64_t w = 0;
    std::uint64_t h = 0;
    if (!model.cameras.empty()) {
        w = model.cameras.begin()->second.width;
        h = model.cameras.begin()->second.height;
    }
    video["width"] = w;
    video["height"] = h;
    video["frame_names"] = frames;

    json registered = json::array();
    json image_ids = json::array();
    std::size_t n_registered = 0;
    for (const auto& name : frames) {
        const ImageRecord* rec = model.find_image_by_name(name);
        registered.push_back(rec != nullptr);
        image_ids.push_back(rec != nullptr ? json(rec->image_id) : json(nullptr));
        n_registered += rec != nullptr ? 1 : 0;
    }
    json m;
    m["colmap_dir"] = fs::absolute(a.colmap_dir).lexically_normal().string();
    m["video"] = video;
    m["registered"] = registered;
    m["image_ids"] = image_ids;
    m["counts"] = {{"cameras", model.cameras.size()},
                   {"images", model.images.size()},
                   {"points3D", model.points.size()},
                   {"registered_frames", n_registered}};
    m["warnings"] = warnings;
    write_text(a.out, m.dump(2) + "\n");
    std::cout << m["counts"].dump() << '\n';
    return kExitOk;
}

struct Manifest {
    VideoMeta video;
    std::vector<bool> registered;
    std::vector<std::optional<std::uint32_t>> image_ids;
    fs::path colmap_dir;
};

Manifest load_manifest(const fs::path& path) {
    const json j = cli::read_json_file(path);
    Manifest m;
    try {
        const auto& v = j.at("video");
        m.video.video_id = v.at("video_id").get<std::string>();
        m.video.frame_count = v.at("frame_count").get<std::int64_t>();
        m.video.fps = v.at("fps").get<double>();
        m.video.width = v.at("width").get<int>();
        m.video.height = v.at("height").get<int>();
        m.video.frame_names = v.at("frame_names").get<std::vector<std::string>>();
        m.registered = j.at("registered").get<std::vector<bool>>();
        for (const auto& id : j.at("image_ids")) {
            m.image_ids.push_back(id.is_null() ? std::nullopt : std::optional<std::uint32_t>(id.get<std::uint32_t>()));
        }
        m.colmap_dir = j.at("colmap_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, "manifest " + path.string() + ": " + e.what());
    }
    if (m.registered.size() != m.video.frame_names.size() || m.image_ids.size() != m.video.frame_names.size()) {
        throw Error(ErrorCode::MalformedRecord, "manifest arrays disagree with frame_names");
    }
    return m;
}

// -- sample ---------------------------------------------------------------------

struct SampleArgs {
    std::string manifest;
    std::string out;
    std::optional<std::int64_t> dt;
    std::optional<std::int64_t> eps;
    std::optional<std::size_t> n_context;
    std::optional<std::size_t> n_target;
    std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& a, const cli::RunConfig& cfg) {
    const std::int64_t dt = a.dt.value_or(cfg.sampling.dt);
    const std::int64_t eps = a.eps.value_or(cfg.sampling.eps);
    const std::size_t n_context = a.n_context.value_or(cfg.sampling.n_context);
    const std::size_t n_target = a.n_target.value_or(cfg.sampling.n_target);
    if (dt < 1) {
        throw Error(ErrorCode::OutOfRange, "dt must be >= 1");
    }
    if (eps < 0 || 2 * eps >= dt) {
        throw Error(ErrorCode::InvalidPerturbation,
                    "need 0 <= 2*eps < dt, got eps=" + std::to_string(eps) + " dt=" + std::to_string(dt));
    }
    const Manifest m = load_manifest(a.manifest);
    const auto n = static_cast<std::int64_t>(n_context + n_target);
    const std::int64_t span = (n - 1) * dt;

    std::string out;
    std::size_t emitted = 0;
    std::size_t rejected = 0;
    std::uint64_t window = 0;
    for (std::int64_t t0 = eps; t0 + span + eps < m.video.frame_count; t0 += n * dt, ++window) {
        const std::uint64_t seed = CounterRng::mix64(a.seed + window);
        const Trajectory traj =
            eps == 0 ? sample_uniform(m.video, t0, dt, n - 1) : sample_perturbed(m.video, t0, dt, n - 1, eps, seed);
        const bool all_registered = std::all_of(traj.frame_indices.begin(), traj.frame_indices.end(),
                                                [&](std::int64_t f) { return m.registered[static_cast<std::size_t>(f)]; });
        if (!all_registered) {
            ++rejected;
            continue;
        }
        out += clip_to_json_line(split_context_target(traj, n_context, n_target, seed)) + "\n";
        ++emitted;
    }
    write_text(a.out, out);
    std::cout << json({{"clips", emitted}, {"rejected_unregistered", rejected}}).dump() << '\n';
    return kExitOk;
}

// -- project --------------------------------------------------------------------

struct ProjectArgs {
    std::string manifest;
    std::string clips;
    std::int64_t clip = 0;
    std::string out;
    bool all_in_front = false;
    std::optional<double> max_reproj_error;
};

Clip read_clip(const fs::path& path, std::int64_t index) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    std::string line;
    std::int64_t i = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (i++ == index) {
            return clip_from_json_line(line);
        }
    }
    throw Error(ErrorCode::UnknownClip, "clip " + std::to_string(index) + " not in " + path.string());
}

int cmd_project(const ProjectArgs& a) {
    const Manifest m = load_manifest(a.manifest);
    const Clip clip = read_clip(a.clips, a.clip);
    const SparseModel model = load_model(m.colmap_dir);

    std::vector<std::uint32_t> ids;
    for (const auto f : clip.context_indices) {
        if (f < 0 || static_cast<std::size_t>(f) >= m.image_ids.size()) {
            throw Error(ErrorCode::OutOfRange, "clip frame " + std::to_string(f) + " outside the manifest");
        }
        const auto& id = m.image_ids[static_cast<std::size_t>(f)];
        if (!id) {
            throw Error(ErrorCode::RegistrationGap, "frame " + m.video.frame_names[static_cast<std::size_t>(f)] +
                                                        " has no registered pose");
        }
        ids.push_back(*id);
    }
    if (ids.empty()) {
        throw Error(ErrorCode::InsufficientFrames, "clip has no context frames");
    }
    const auto image_of = [&](std::uint32_t id) -> const ImageRecord& {
        const auto it = model.images.find(id);
        if (it == model.images.end()) {
            throw Error(ErrorCode::UnknownImage, "image id " + std::to_string(id) + " not in model");
        }
        return it->second;
    };
    const Pose pose_ref = Pose::from_image(image_of(ids.front()));

    SparseDepthOptions opts;
    opts.visibility = a.all_in_front ? Visibility::AllInFront : Visibility::TrackOnly;
    opts.max_reproj_error = a.max_reproj_error;
    fs::create_directories(a.out);
    json summary = json::array();
    for (std::size_t v = 0; v < ids.size(); ++v) {
        const ImageRecord& image = image_of(ids[v]);
        const CameraIntrinsics& k = model.cameras.at(image.camera_id);
        const SparseDepthMap depth = render_sparse_depth(model, ids[v], opts);
        const AnchorGrid grid = anchor_pointmap_from_depth(depth, k, Pose::from_image(image), pose_ref);
        char stem[32];
        std::snprintf(stem, sizeof(stem), "view_%03zu", v);
        write_depth_ply(fs::path(a.out) / (std::string(stem) + "_depth.ply"), depth);
        write_anchor_ply(fs::path(a.out) / (std::string(stem) + "_anchor.ply"), grid);
        summary.push_back({{"view", v}, {"image", image.name}, {"depth_entries", depth.entries.size()}});
    }
    std::cout << summary.dump() << '\n';
    return kExitOk;
}

// -- gradcheck ------------------------------------------------------------------

struct GradcheckArgs {
    std::optional<int> probes;
    std::optional<std::uint64_t> seed;
    bool corrupt = false;
    std::string dump;
};

int cmd_gradcheck(const GradcheckArgs& a, const cli::RunConfig& cfg) {
    GradCheckSuiteOptions o = cfg.gradcheck;
    o.probes = a.probes.value_or(o.probes);
    o.seed = a.seed.value_or(o.seed);
    o.corrupt_gradient = a.corrupt;
    if (o.probes < 1) {
        throw Error(ErrorCode::InvalidConfig, "--probes must be >= 1");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = run_gradcheck_suites(o);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& r : results) {
        std::printf("%-18s max_rel_error=%.3e threshold=%.0e %s\n", r.name.c_str(), r.report.max_rel_error, r.threshold,
                    r.pass() ? "ok" : "FAIL");
    }
    std::printf("elapsed_s=%.3f\n", seconds);
    if (!a.dump.empty()) {
        write_text(a.dump, gradcheck_dump_json(o.seed) + "\n");
    }
    const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass(); });
    return ok ? kExitOk : kExitGate;
}

// -- optimize / ablate -------------------------------------------------------------

struct OptimizeArgs {
    std::string scene_spec;
    std::string out;
    std::string report;
    std::string export_dir;
    std::optional<int> steps;
};

void export_scene(const SyntheticScene& scene, const OptimizationState& state, const fs::path& dir) {
    fs::create_directories(dir);
    write_pointmap_ply(dir / "gt_pointmaps.ply", scene.gt_pointmaps);
    write_pointmap_ply(dir / "init_pointmaps.ply", scene.init_pointmaps);
    write_pointmap_ply(dir / "final_pointmaps.ply", state.pointmaps);
    for (std::size_t f = 0; f < scene.images.size(); ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%03zu.ppm", f);
        write_ppm(dir / name, scene.images[f]);
    }
}

int cmd_optimize(const OptimizeArgs& a, const cli::RunConfig& cfg) {
    SceneSpec spec = cfg.scene;
    std::uint64_t seed = cfg.scene_seed;
    if (!a.scene_spec.empty()) {
        spec = cli::parse_scene_spec(cli::read_json_file(a.scene_spec), &seed);
    }
    OptimizeConfig oc = cfg.optimize;
    oc.steps = a.steps.value_or(oc.steps);
    const SyntheticScene scene = synth_scene(spec, seed);
    OptimizeResult result;
    try {
        result = optimize(scene, oc);
    } catch (const DivergedLossError& e) {
        write_text(a.out, trace_csv(e.trace()));
        throw;
    }
    write_text(a.out, trace_csv(result.trace));
    const double ratio = result.final.chamfer / result.initial.chamfer;
    const bool pass = ratio <= cfg.cd_gate;
    json r;
    r["initial"] = json::parse(metrics_report_json(result.initial));
    r["final"] = json::parse(metrics_report_json(result.final));
    r["cd_ratio"] = ratio;
    r["cd_gate"] = cfg.cd_gate;
    r["pass"] = pass;
    if (!a.report.empty()) {
        write_text(a.report, r.dump(2) + "\n");
    }
    if (!a.export_dir.empty()) {
        export_scene(scene, result.state, a.export_dir);
    }
    std::cout << r.dump() << '\n';
    return pass ? kExitOk : kExitGate;
}

struct AblateArgs {
    std::string scene_spec;
    std::string out;
    std::optional<int> steps;
};

int cmd_ablate(const AblateArgs& a, const cli::RunConfig& cfg, int threads) {
    SceneSpec spec = cfg.scene;
    if (!a.scene_spec.empty()) {
        spec = cli::parse_scene_spec(cli::read_json_file(a.scene_spec), nullptr);
    }
    OptimizeConfig oc = cfg.optimize;
    oc.steps = a.steps.value_or(oc.steps);
    const AblationReport report = run_ablation(spec, cfg.ablation_seeds, oc, threads);
    const std::string text = ablation_report_json(report);
    if (!a.out.empty()) {
        write_text(a.out, text + "\n");
    }
    std::cout << text << '\n';
    const bool ok = std::all_of(report.ordering_holds.begin(), report.ordering_holds.end(), [](bool b) { return b; }) &&
                    std::all_of(report.frozen_within_tolerance.begin(), report.frozen_within_tolerance.end(),
                                [](bool b) { return b; });
    return ok ? kExitOk : kExitGate;
}

// -- evaluate -------------------------------------------------------------------

struct EvaluateArgs {
    std::string pred;
    std::string pointmaps;
    std::string gt;
    std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, const cli::RunConfig& cfg) {
    const std::string pred_path = a.pointmaps.empty() ? a.pred : a.pointmaps;
    if (pred_path.empty()) {
        throw Error(ErrorCode::InvalidConfig, "one of --pred or --pointmaps is required");
    }
    if (!fs::exists(pred_path)) {
        throw Error(ErrorCode::MissingFile, "prediction not found: " + pred_path);
    }
    if (!fs::exists(a.gt)) {
        throw Error(ErrorCode::MissingFile, "ground truth not found: " + a.gt);
    }
    MetricsReport report;
    const bool pred_pm = is_pointmap_ply(pred_path);
    const bool gt_pm = is_pointmap_ply(a.gt);
    if (!a.pointmaps.empty() && (!pred_pm || !gt_pm)) {
        throw Error(ErrorCode::ShapeMismatch, "--pointmaps needs pixel-aligned pointmap PLYs on both sides");
    }
    if (pred_pm && gt_pm) {
        report = evaluate_pointmaps(read_pointmap_ply(pred_path), read_pointmap_ply(a.gt), cfg.dac_taus);
    } else {
        const auto p = read_points_ply(pred_path);
        const auto g = read_points_ply(a.gt);
        report = evaluate_point_clouds(p, g);
    }
    const std::string text = metrics_report_json(report);
    if (!a.out.empty()) {
        write_text(a.out, text + "\n");
    }
    std::cout << text << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anchorsplat: weak 3D supervision from COLMAP reconstructions"};
    app.require_subcommand(0, 1);
    std::string config_path;
    bool print_config = false;
    int threads = 0;
    app.add_option("--config", config_path, "RunConfig JSON overriding the defaults");
    app.add_flag("--print-config", print_config, "Print the effective configuration and exit");
    app.add_option("--threads", threads, "Cap on worker threads (0: from config)")->check(CLI::NonNegativeNumber);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Validate a COLMAP model and write a dataset manifest");
    c_ingest->add_option("--colmap-dir", ingest.colmap_dir, "Directory with cameras/images/points3D")->required();
    c_ingest->add_option("--frames-dir", ingest.frames_dir, "Directory of extracted frames");
    c_ingest->add_option("--video-id", ingest.video_id, "Identifier recorded in the manifest");
    c_ingest->add_option("--out", ingest.out, "Manifest JSON path")->required();

    SampleArgs sample;
    auto* c_sample = app.add_subcommand("sample", "Sample trajectories and split them into clips");
    c_sample->add_option("--manifest", sample.manifest)->required();
    c_sample->add_option("--dt", sample.dt, "Frame spacing");
    c_sample->add_option("--eps", sample.eps, "Perturbation bound in frames (0: uniform)");
    c_sample->add_option("--n-context", sample.n_context);
    c_sample->add_option("--n-target", sample.n_target);
    c_sample->add_option("--seed", sample.seed);
    c_sample->add_option("--out", sample.out, "Clip JSONL path")->required();

    ProjectArgs project;
    auto* c_project = app.add_subcommand("project", "Write sparse depth maps and anchor pointmaps for one clip");
    c_project->add_option("--manifest", project.manifest)->required();
    c_project->add_option("--clips", project.clips, "Clip JSONL from `sample`")->required();
    c_project->add_option("--clip", project.clip, "Zero-based clip line")->required();
    c_project->add_option("--out", project.out, "Output directory")->required();
    c_project->add_flag("--all-in-front", project.all_in_front, "Project every point in front of the camera");
    c_project->add_option("--max-reproj-error", project.max_reproj_error);

    GradcheckArgs gradcheck;
    auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference checks of every analytic gradient");
    c_grad->add_option("--probes", gradcheck.probes);
    c_grad->add_option("--seed", gradcheck.seed);
    c_grad->add_flag("--corrupt-gradient", gradcheck.corrupt, "Test hook: perturb the anchor gradient");
    c_grad->add_option("--dump", gradcheck.dump, "Write inputs, values and gradients of the seeded batch");

    OptimizeArgs opt;
    auto* c_opt = app.add_subcommand("optimize", "Optimize pointmaps on a synthetic scene");
    c_opt->add_option("--scene-spec", opt.scene_spec, "Scene JSON (keys of the config's scene section)");
    c_opt->add_option("--out", opt.out, "Trace CSV path")->required();
    c_opt->add_option("--report", opt.report, "Report JSON path");
    c_opt->add_option("--export-dir", opt.export_dir, "Write scene PLY/PPM files here");
    c_opt->add_option("--steps", opt.steps);

    AblateArgs ablate;
    auto* c_ablate = app.add_subcommand("ablate", "Run the four ablation arms over the configured seeds");
    c_ablate->add_option("--scene-spec", ablate.scene_spec);
    c_ablate->add_option("--out", ablate.out, "Report JSON path");
    c_ablate->add_option("--steps", ablate.steps);

    EvaluateArgs eval;
    auto* c_eval = app.add_subcommand("evaluate", "Chamfer distance and DAc against ground truth");
    c_eval->add_option("--pred", eval.pred, "Predicted point cloud PLY");
    c_eval->add_option("--pointmaps", eval.pointmaps, "Predicted pointmap PLY");
    c_eval->add_option("--gt", eval.gt, "Ground-truth PLY")->required();
    c_eval->add_option("--out", eval.out, "Report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    try {
        const json merged = cli::load_config_json(config_path);
        const cli::RunConfig cfg = cli::parse_config(merged);
        if (print_config) {
            std::cout << merged.dump(2) << '\n';
            return kExitOk;
        }
        const int n_threads = threads > 0 ? threads : cfg.threads;
        if (*c_ingest) {
            return cmd_ingest(ingest, cfg);
        }
        if (*c_sample) {
            return cmd_sample(sample, cfg);
        }
        if (*c_project) {
            return cmd_project(project);
        }
        if (*c_grad) {
            return cmd_gradcheck(gradcheck, cfg);
        }
        if (*c_opt) {
            return cmd_optimize(opt, cfg);
        }
        if (*c_ablate) {
            return cmd_ablate(ablate, cfg, n_threads);
        }
        if (*c_eval) {
            return cmd_evaluate(eval, cfg);
        }
        std::cout << app.help() << '\n';
        return kExitInput;
    } catch (const DivergedLossError& e) {
        report_error(std::string(to_string(e.code())), e.what());
        return kExitGate;
    } catch (const Error& e) {
        report_error(std::string(to_string(e.code())), e.what());
        return kExitInput;
    } catch (const nlohmann::json::exception& e) {
        report_error("InvalidConfig", e.what());
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        report_error("IoFailure", e.what());
        return kExitInput;
    }
}
