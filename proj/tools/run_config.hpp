// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "anchorsplat/gradcheck.hpp"
#include "anchorsplat/harness.hpp"

namespace anchorsplat::cli {

struct SamplingConfig {
    std::int64_t dt = 20;
    std::int64_t eps = 5;
    std::size_t n_context = 8;
    std::size_t n_target = 2;
    double fps = 30.0;
};

struct RunConfig {
    OptimizeConfig optimize;
    double cd_gate = 0.2;
    SceneSpec scene;
    std::uint64_t scene_seed = 0;
    std::vector<std::uint64_t> ablation_seeds{1, 2, 3};
    SamplingConfig sampling;
    GradCheckSuiteOptions gradcheck;
    std::vector<double> dac_taus{0.2};
    int threads = 1;
};

/// The full default document, also printed by --print-config.
nlohmann::ordered_json default_config_json();

/// Overlays `user` on the defaults. Unknown keys and type mismatches throw
/// InvalidConfig naming the offending path.
nlohmann::ordered_json merge_config(const nlohmann::ordered_json& user);

RunConfig parse_config(const nlohmann::ordered_json& merged);

/// Reads and validates a config file; an empty path yields the defaults.
nlohmann::ordered_json load_config_json(const std::filesystem::path& path);

/// A scene spec document validated against the "scene" section.
SceneSpec parse_scene_spec(const nlohmann::ordered_json& doc, std::uint64_t* seed);

nlohmann::ordered_json read_json_file(const std::filesystem::path& path);

}  // namespace anchorsplat::cli
