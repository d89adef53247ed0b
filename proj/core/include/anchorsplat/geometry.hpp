// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "anchorsplat/colmap_io.hpp"

namespace anchorsplat {

/// Rigid world-to-camera transform: x_cam = R * x_world + t.
struct Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static Pose identity() { return {}; }
    static Pose from_qvec(const std::array<double, 4>& qvec, const Eigen::Vector3d& t);
    static Pose from_image(const ImageRecord& image) { return from_qvec(image.qvec, image.translation); }

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
    Pose inverse() const;
    /// (this ∘ other)(p) = this(other(p)).
    Pose compose(const Pose& other) const;
    Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
    Eigen::Matrix4d matrix() const;
};

/// True when RᵀR = I and det R = +1 within `tol`.
bool is_valid_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

/// Pinhole projection (radial terms ignored). Empty when the point is not in
/// front of the camera (depth <= 0).
std::optional<Projection> project_point(const CameraIntrinsics& k, const Pose& pose, const Eigen::Vector3d& p);

/// Camera-frame point for pixel (u, v) at depth d.
Eigen::Vector3d unproject(const CameraIntrinsics& k, double u, double v, double depth);

struct DepthEntry {
    int u = 0;
    int v = 0;
    double depth = 0.0;
    std::uint64_t point3d_id = 0;

    bool operator==(const DepthEntry&) const = default;
};

/// Sparse depth samples, one per pixel at most, in row-major pixel order.
struct SparseDepthMap {
    int width = 0;
    int height = 0;
    std::vector<DepthEntry> entries;
};

enum class Visibility { TrackOnly, AllInFront };

struct SparseDepthOptions {
    Visibility visibility = Visibility::TrackOnly;
    // Points with a larger COLMAP reprojection error are skipped when set.
    std::optional<double> max_reproj_error;
};

/// Projects model points into `image_id`, rounding to the nearest pixel and
/// keeping the nearest depth on collisions. Throws UnknownImage.
SparseDepthMap render_sparse_depth(const SparseModel& model, std::uint32_t image_id,
                                   const SparseDepthOptions& options = {});

/// Dense H×W grid of 3-vectors with a validity mask, row-major.
struct AnchorGrid {
    int width = 0;
    int height = 0;
    std::vector<Eigen::Vector3d> points;
    std::vector<std::uint8_t> mask;

    std::size_t anchored_count() const;
};

/// Lifts sparse depth samples of view v into the reference camera frame.
AnchorGrid anchor_pointmap_from_depth(const SparseDepthMap& depth, const CameraIntrinsics& k, const Pose& pose_v,
                                      const Pose& pose_ref);

/// Mean Euclidean norm over masked points. Throws DegenerateScale when no
/// point is selected or all selected points sit at the origin. An empty mask
/// span selects every point.
double scale_norm(std::span<const Eigen::Vector3d> points, std::span<const std::uint8_t> mask = {});

}  // namespace anchorsplat
