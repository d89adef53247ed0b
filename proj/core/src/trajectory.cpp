// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/trajectory.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "anchorsplat/error.hpp"
#include "anchorsplat/random.hpp"

namespace anchorsplat {

namespace {

// Stream ids keep the perturbation and split draws independent under one seed.
constexpr std::uint64_t kPerturbStream = 0x7065727475726221ULL;
constexpr std::uint64_t kSplitStream = 0x73706c6974212121ULL;

void check_window(const VideoMeta& video, std::int64_t first, std::int64_t last) {
    if (first < 0 || last >= video.frame_count) {
        throw Error(ErrorCode::OutOfRange, "frames [" + std::to_string(first) + ", " + std::to_string(last) +
                                               "] exceed video " + video.video_id + " with " +
                                               std::to_string(video.frame_count) + " frames");
    }
}

void check_spacing(std::int64_t dt, std::int64_t n) {
    if (dt < 1) {
        throw Error(ErrorCode::OutOfRange, "temporal interval must be >= 1");
    }
    if (n < 0) {
        throw Error(ErrorCode::OutOfRange, "frame count must be >= 0");
    }
}

}  // namespace

std::vector<VideoMeta> filter_videos(const std::vector<VideoMeta>& catalog, const VideoFilter& filter) {
    std::vector<VideoMeta> kept;
    for (const auto& video : catalog) {
        if (!(video.fps > 0.0)) {
            continue;
        }
        const std::int64_t short_side = std::min(video.width, video.height);
        if (video.duration_s() >= filter.min_duration_s && short_side >= filter.min_short_side) {
            kept.push_back(video);
        }
    }
    return kept;
}

Trajectory sample_uniform(const VideoMeta& video, std::int64_t t0, std::int64_t dt, std::int64_t n) {
    check_spacing(dt, n);
    check_window(video, t0, t0 + n * dt);
    Trajectory traj;
    traj.video_id = video.video_id;
    traj.frame_indices.reserve(static_cast<std::size_t>(n + 1));
    for (std::int64_t i = 0; i <= n; ++i) {
        traj.frame_indices.push_back(t0 + i * dt);
    }
    return traj;
}

Trajectory sample_perturbed(const VideoMeta& video, std::int64_t t0, std::int64_t dt, std::int64_t n,
                            std::int64_t eps, std::uint64_t seed) {
    check_spacing(dt, n);
    if (eps < 0 || 2 * eps >= dt) {
        throw Error(ErrorCode::InvalidPerturbation,
                    "need 0 <= 2*eps < dt, got eps=" + std::to_string(eps) + " dt=" + std::to_string(dt));
    }
    if (eps == 0) {
        return sample_uniform(video, t0, dt, n);
    }
    check_window(video, t0 - eps, t0 + n * dt + eps);
    Trajectory traj;
    traj.video_id = video.video_id;
    traj.sampling = {SamplingKind::Perturbed, eps, seed};
    CounterRng rng(seed, kPerturbStream);
    for (std::int64_t i = 0; i <= n; ++i) {
        const std::int64_t delta = rng.uniform_int(-eps, eps);
        traj.frame_indices.push_back(t0 + i * dt + delta);
    }
    return traj;
}

Clip split_context_target(const Trajectory& traj, std::size_t n_context, std::size_t n_target, std::uint64_t seed) {
    const std::size_t m = traj.frame_indices.size();
    if (n_context + n_target != m || n_context < 2 || n_target < 1 || n_target + 2 > m) {
        throw Error(ErrorCode::InsufficientFrames,
                    "cannot split " + std::to_string(m) + " frames into " + std::to_string(n_context) +
                        " context + " + std::to_string(n_target) + " interior targets");
    }
    // Partial Fisher-Yates over interior positions 1..m-2.
    std::vector<std::size_t> interior(m - 2);
    std::iota(interior.begin(), interior.end(), std::size_t{1});
    CounterRng rng(seed, kSplitStream);
    for (std::size_t k = 0; k < n_target; ++k) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(interior.size() - 1)));
        std::swap(interior[k], interior[j]);
    }
    std::vector<bool> is_target(m, false);
    for (std::size_t k = 0; k < n_target; ++k) {
        is_target[interior[k]] = true;
    }

    Clip clip;
    clip.trajectory = traj;
    clip.split_seed = seed;
    for (std::size_t pos = 0; pos < m; ++pos) {
        (is_target[pos] ? clip.target_indices : clip.context_indices).push_back(traj.frame_indices[pos]);
    }
    return clip;
}

bool satisfies_interpolation_rule(const Clip& clip) {
    if (clip.context_indices.size() < 2 || clip.target_indices.empty()) {
        return false;
    }
    const auto [lo, hi] = std::minmax_element(clip.context_indices.begin(), clip.context_indices.end());
    for (const auto t : clip.target_indices) {
        if (t <= *lo || t >= *hi) {
            return false;
        }
        if (std::find(clip.context_indices.begin(), clip.context_indices.end(), t) != clip.context_indices.end()) {
            return false;
        }
    }
    return true;
}

std::string clip_to_json_line(const Clip& clip) {
    nlohmann::ordered_json j;
    j["video_id"] = clip.trajectory.video_id;
    j["frame_indices"] = clip.trajectory.frame_indices;
    j["context"] = clip.context_indices;
    j["targets"] = clip.target_indices;
    nlohmann::ordered_json sampling;
    if (clip.trajectory.sampling.kind == SamplingKind::Uniform) {
        sampling["kind"] = "uniform";
    } else {
        sampling["kind"] = "perturbed";
        sampling["epsilon"] = clip.trajectory.sampling.epsilon;
        sampling["seed"] = clip.trajectory.sampling.seed;
    }
    j["sampling"] = sampling;
    j["seed"] = clip.split_seed;
    return j.dump();
}

Clip clip_from_json_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        Clip clip;
        clip.trajectory.video_id = j.at("video_id").get<std::string>();
        clip.trajectory.frame_indices = j.at("frame_indices").get<std::vector<std::int64_t>>();
        clip.context_indices = j.at("context").get<std::vector<std::int64_t>>();
        clip.target_indices = j.at("targets").get<std::vector<std::int64_t>>();
        const auto& s = j.at("sampling");
        const auto kind = s.at("kind").get<std::string>();
        if (kind == "perturbed") {
            clip.trajectory.sampling = {SamplingKind::Perturbed, s.at("epsilon").get<std::int64_t>(),
                                        s.at("seed").get<std::uint64_t>()};
        } else if (kind != "uniform") {
            throw Error(ErrorCode::MalformedRecord, "unknown sampling kind " + kind);
        }
        clip.split_seed = j.at("seed").get<std::uint64_t>();
        return clip;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedRecord, std::string("clip manifest: ") + e.what());
    }
}

}  // namespace anchorsplat
