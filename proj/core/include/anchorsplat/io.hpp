// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "anchorsplat/geometry.hpp"
#include "anchorsplat/gsplat.hpp"
#include "anchorsplat/pointmap.hpp"

namespace anchorsplat {

// All writers produce ASCII output with shortest round-trip number formatting
// so repeated runs are byte-identical. Failures throw IoFailure / MalformedRecord.

/// PLY with per-vertex u, v, d, point3d_id.
void write_depth_ply(const std::filesystem::path& path, const SparseDepthMap& depth);
SparseDepthMap read_depth_ply(const std::filesystem::path& path);

/// Plain x, y, z point cloud.
void write_points_ply(const std::filesystem::path& path, std::span<const Eigen::Vector3d> points);
/// Reads x, y, z from any ASCII PLY vertex element (extra properties ignored).
std::vector<Eigen::Vector3d> read_points_ply(const std::filesystem::path& path);

/// Pixel-aligned pointmaps: a header comment records views/height/width and
/// every pixel is a vertex with x, y, z, conf_raw, valid.
void write_pointmap_ply(const std::filesystem::path& path, const PointmapSet& pointmaps);
PointmapSet read_pointmap_ply(const std::filesystem::path& path);
/// True when the PLY carries the pointmap layout comment.
bool is_pointmap_ply(const std::filesystem::path& path);

/// Anchor grid as a pointmap PLY with one view (valid = anchored).
void write_anchor_ply(const std::filesystem::path& path, const AnchorGrid& grid);

/// Gaussians with per-vertex scale, opacity and color.
void write_gaussians_ply(const std::filesystem::path& path, const GaussianSet& gaussians);

/// ASCII (P3) PPM, 8-bit, values mapped linearly from [0, 1]. The reader also
/// accepts binary P6.
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

}  // namespace anchorsplat
