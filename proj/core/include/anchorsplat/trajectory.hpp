// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace anchorsplat {

struct VideoMeta {
    std::string video_id;
    std::int64_t frame_count = 0;
    double fps = 30.0;
    std::int64_t width = 0;
    std::int64_t height = 0;
    std::vector<std::string> frame_names;

    double duration_s() const { return static_cast<double>(frame_count) / fps; }
};

enum class SamplingKind { Uniform, Perturbed };

struct Sampling {
    SamplingKind kind = SamplingKind::Uniform;
    std::int64_t epsilon = 0;
    std::uint64_t seed = 0;

    bool operator==(const Sampling&) const = default;
};

struct Trajectory {
    std::string video_id;
    std::vector<std::int64_t> frame_indices;  // strictly increasing
    Sampling sampling;

    bool operator==(const Trajectory&) const = default;
};

/// A trajectory split into model inputs (context) and held-out interpolated
/// supervision frames (targets). Both hold frame indices in increasing order.
struct Clip {
    Trajectory trajectory;
    std::vector<std::int64_t> context_indices;
    std::vector<std::int64_t> target_indices;
    std::uint64_t split_seed = 0;

    bool operator==(const Clip&) const = default;
};

struct VideoFilter {
    double min_duration_s = 10.0;
    std::int64_t min_short_side = 480;
};

/// Keeps videos at least `min_duration_s` long whose short side reaches
/// `min_short_side` pixels (480p means 480 on the short side).
std::vector<VideoMeta> filter_videos(const std::vector<VideoMeta>& catalog, const VideoFilter& filter = {});

/// Frames t0, t0 + dt, ..., t0 + n*dt. Throws OutOfRange.
Trajectory sample_uniform(const VideoMeta& video, std::int64_t t0, std::int64_t dt, std::int64_t n);

/// Frames t0 + i*dt + delta_i with integer delta_i uniform on [-eps, eps].
/// Requires 2*eps < dt so order is preserved without sorting.
/// Throws OutOfRange or InvalidPerturbation.
Trajectory sample_perturbed(const VideoMeta& video, std::int64_t t0, std::int64_t dt, std::int64_t n,
                            std::int64_t eps, std::uint64_t seed);

/// Draws `n_target` targets without replacement from the interior positions
/// (never the first or last frame); the rest become context in order.
/// Throws InsufficientFrames.
Clip split_context_target(const Trajectory& traj, std::size_t n_context, std::size_t n_target, std::uint64_t seed);

/// True when every target lies strictly inside the context span and the two
/// sets are disjoint.
bool satisfies_interpolation_rule(const Clip& clip);

/// One JSON object per line: {video_id, frame_indices, context, targets, sampling, seed}.
std::string clip_to_json_line(const Clip& clip);
Clip clip_from_json_line(std::string_view line);

}  // namespace anchorsplat
