// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "run_config.hpp"

#include <fstream>
#include <sstream>

#include "anchorsplat/error.hpp"

namespace anchorsplat::cli {

using json = nlohmann::ordered_json;

namespace {

std::string shape_name(SceneShape s) {
    switch (s) {
        case SceneShape::Room:
            return "Room";
        case SceneShape::Slab:
            return "Slab";
        case SceneShape::RandomHeightfield:
            return "RandomHeightfield";
    }
    return "Slab";
}

SceneShape parse_shape(const std::string& s) {
    if (s == "Room") {
        return SceneShape::Room;
    }
    if (s == "Slab") {
        return SceneShape::Slab;
    }
    if (s == "RandomHeightfield") {
        return SceneShape::RandomHeightfield;
    }
    throw Error(ErrorCode::InvalidConfig, "scene.shape must be Room, Slab or RandomHeightfield, got " + s);
}

json scene_json(const SceneSpec& s, std::uint64_t seed) {
    json j;
    j["n_context"] = s.n_context;
    j["n_target"] = s.n_target;
    j["height"] = s.height;
    j["width"] = s.width;
    j["shape"] = shape_name(s.shape);
    j["anchor_fraction"] = s.anchor_fraction;
    j["noise"] = s.noise;
    j["init"] = s.init == InitKind::Noise ? "Noise" : "FrontoParallel";
    j["splat_footprint_px"] = s.splat_footprint_px;
    j["splat_opacity"] = s.splat_opacity;
    j["scene_depth"] = s.scene_depth;
    j["baseline"] = s.baseline;
    j["texture_frequency"] = s.texture_frequency;
    j["seed"] = seed;
    return j;
}

bool same_kind(const json& def, const json& val) {
    if (def.is_boolean()) {
        return val.is_boolean();
    }
    if (def.is_number_float()) {
        return val.is_number();
    }
    if (def.is_number_integer()) {
        return val.is_number_integer();
    }
    if (def.is_string()) {
        return val.is_string();
    }
    if (def.is_array()) {
        return val.is_array();
    }
    if (def.is_object()) {
        return val.is_object();
    }
    return false;
}

void overlay(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) {
        throw Error(ErrorCode::InvalidConfig, "config section '" + (path.empty() ? "<root>" : path) + "' must be an object");
    }
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) {
            throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
        }
        json& slot = base[it.key()];
        if (!same_kind(slot, it.value())) {
            throw Error(ErrorCode::InvalidConfig, "config key '" + key + "' has the wrong type");
        }
        if (slot.is_object()) {
            overlay(slot, it.value(), key);
        } else {
            slot = it.value();
        }
    }
}

}  // namespace

json default_config_json() {
    const RunConfig d;
    const auto& o = d.optimize;
    json j;
    j["anchor"] = {{"alpha", o.anchor.alpha}, {"skip_degenerate", o.anchor.skip_degenerate}};
    j["hybrid"] = {{"w_anchor", o.hybrid.w_anchor}, {"w_render", o.hybrid.w_render}, {"w_sup", o.hybrid.w_sup}};
    j["render"] = {{"w_perceptual", o.render.w_perceptual}, {"ssim_window", o.render.ssim_window}};
    j["raster"] = {{"background", {o.raster.background.x(), o.raster.background.y(), o.raster.background.z()}},
                   {"radius_cutoff", o.raster.radius_cutoff},
                   {"min_alpha", o.raster.min_alpha}};
    j["optimize"] = {{"steps", o.steps},
                     {"lr", o.adam.lr},
                     {"beta1", o.adam.beta1},
                     {"beta2", o.adam.beta2},
                     {"eps", o.adam.eps},
                     {"frozen_shape", o.frozen_shape},
                     {"cd_gate", d.cd_gate}};
    j["mixing"] = {{"enabled", false}, {"video", 30}, {"anchor", 1}, {"seed", o.mix_seed}};
    j["sampling"] = {{"dt", d.sampling.dt},
                     {"eps", d.sampling.eps},
                     {"n_context", d.sampling.n_context},
                     {"n_target", d.sampling.n_target},
                     {"fps", d.sampling.fps}};
    j["scene"] = scene_json(d.scene, d.scene_seed);
    j["ablation"] = {{"seeds", d.ablation_seeds}};
    const auto& g = d.gradcheck;
    j["gradcheck"] = {{"probes", g.probes},         {"seed", g.seed},           {"h_anchor", g.h_anchor},
                      {"h_render", g.h_render},     {"h_raster", g.h_raster},   {"tol_anchor", g.tol_anchor},
                      {"tol_render", g.tol_render}, {"tol_raster", g.tol_raster}};
    j["evaluate"] = {{"dac_taus", d.dac_taus}};
    j["threads"] = d.threads;
    return j;
}

json merge_config(const json& user) {
    json merged = default_config_json();
    if (!user.is_null()) {
        overlay(merged, user, "");
    }
    return merged;
}

SceneSpec parse_scene_spec(const json& doc, std::uint64_t* seed) {
    json base = default_config_json()["scene"];
    overlay(base, doc, "scene");
    SceneSpec s;
    s.n_context = base["n_context"].get<int>();
    s.n_target = base["n_target"].get<int>();
    s.height = base["height"].get<int>();
    s.width = base["width"].get<int>();
    s.shape = parse_shape(base["shape"].get<std::string>());
    s.anchor_fraction = base["anchor_fraction"].get<double>();
    s.noise = base["noise"].get<double>();
    const auto init = base["init"].get<std::string>();
    if (init != "Noise" && init != "FrontoParallel") {
        throw Error(ErrorCode::InvalidConfig, "scene.init must be Noise or FrontoParallel");
    }
    s.init = init == "Noise" ? InitKind::Noise : InitKind::FrontoParallel;
    s.splat_footprint_px = base["splat_footprint_px"].get<double>();
    s.splat_opacity = base["splat_opacity"].get<double>();
    s.scene_depth = base["scene_depth"].get<double>();
    s.baseline = base["baseline"].get<double>();
    s.texture_frequency = base["texture_frequency"].get<double>();
    if (seed != nullptr) {
        *seed = base["seed"].get<std::uint64_t>();
    }
    return s;
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    auto& o = c.optimize;
    o.anchor.alpha = j["anchor"]["alpha"].get<double>();
    o.anchor.skip_degenerate = j["anchor"]["skip_degenerate"].get<bool>();
    o.hybrid.w_anchor = j["hybrid"]["w_anchor"].get<double>();
    o.hybrid.w_render = j["hybrid"]["w_render"].get<double>();
    o.hybrid.w_sup = j["hybrid"]["w_sup"].get<double>();
    o.render.w_perceptual = j["render"]["w_perceptual"].get<double>();
    o.render.ssim_window = j["render"]["ssim_window"].get<int>();
    const auto& bg = j["raster"]["background"];
    if (bg.size() != 3 || !bg[0].is_number() || !bg[1].is_number() || !bg[2].is_number()) {
        throw Error(ErrorCode::InvalidConfig, "raster.background must be three numbers");
    }
    o.raster.background = Eigen::Vector3d(bg[0].get<double>(), bg[1].get<double>(), bg[2].get<double>());
    o.raster.radius_cutoff = j["raster"]["radius_cutoff"].get<bool>();
    o.raster.min_alpha = j["raster"]["min_alpha"].get<double>();
    o.steps = j["optimize"]["steps"].get<int>();
    o.adam.lr = j["optimize"]["lr"].get<double>();
    o.adam.beta1 = j["optimize"]["beta1"].get<double>();
    o.adam.beta2 = j["optimize"]["beta2"].get<double>();
    o.adam.eps = j["optimize"]["eps"].get<double>();
    o.frozen_shape = j["optimize"]["frozen_shape"].get<bool>();
    c.cd_gate = j["optimize"]["cd_gate"].get<double>();
    if (j["mixing"]["enabled"].get<bool>()) {
        MixSpec mix;
        mix.video = j["mixing"]["video"].get<int>();
        mix.anchor = j["mixing"]["anchor"].get<int>();
        if (mix.video < 1 || mix.anchor < 1) {
            throw Error(ErrorCode::InvalidConfig, "mixing ratio entries must be >= 1");
        }
        o.mix = mix;
    }
    o.mix_seed = j["mixing"]["seed"].get<std::uint64_t>();
    c.sampling.dt = j["sampling"]["dt"].get<std::int64_t>();
    c.sampling.eps = j["sampling"]["eps"].get<std::int64_t>();
    c.sampling.n_context = j["sampling"]["n_context"].get<std::size_t>();
    c.sampling.n_target = j["sampling"]["n_target"].get<std::size_t>();
    c.sampling.fps = j["sampling"]["fps"].get<double>();
    c.scene = parse_scene_spec(j["scene"], &c.scene_seed);
    c.ablation_seeds = j["ablation"]["seeds"].get<std::vector<std::uint64_t>>();
    auto& g = c.gradcheck;
    const auto& gj = j["gradcheck"];
    g.probes = gj["probes"].get<int>();
    g.seed = gj["seed"].get<std::uint64_t>();
    g.h_anchor = gj["h_anchor"].get<double>();
    g.h_render = gj["h_render"].get<double>();
    g.h_raster = gj["h_raster"].get<double>();
    g.tol_anchor = gj["tol_anchor"].get<double>();
    g.tol_render = gj["tol_render"].get<double>();
    g.tol_raster = gj["tol_raster"].get<double>();
    c.dac_taus = j["evaluate"]["dac_taus"].get<std::vector<double>>();
    c.threads = j["threads"].get<int>();
    if (c.threads < 1) {
        throw Error(ErrorCode::InvalidConfig, "threads must be >= 1");
    }
    return c;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
    }
}

json load_config_json(const std::filesystem::path& path) {
    if (path.empty()) {
        return default_config_json();
    }
    return merge_config(read_json_file(path));
}

}  // namespace anchorsplat::cli
