// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "anchorsplat/colmap_io.hpp"
#include "anchorsplat/geometry.hpp"
#include "anchorsplat/pointmap.hpp"

namespace anchorsplat {

/// Static 3-d tree for exact nearest-neighbor distance queries.
class KdTree {
public:
    explicit KdTree(std::span<const Eigen::Vector3d> points);

    /// Euclidean distance to the nearest stored point.
    double nearest_distance(const Eigen::Vector3d& query) const;
    std::size_t nearest_index(const Eigen::Vector3d& query) const;
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        int axis = -1;  // -1 for leaves
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Eigen::Vector3d& q, double& best_sq, std::size_t& best_idx) const;

    std::vector<Eigen::Vector3d> points_;
    std::vector<std::uint32_t> index_;
    std::vector<Node> nodes_;
};

/// Symmetric mean nearest-neighbor distance,
/// 0.5·(mean_a min_b ‖a−b‖ + mean_b min_a ‖a−b‖). Throws EmptySet.
double chamfer(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b);

/// Valid points of every view, each divided by the set's scale_norm.
std::vector<Eigen::Vector3d> normalized_points(const PointmapSet& pointmaps);

/// Percentage of pixels (valid in both) whose normalized distance is <= tau.
/// Throws ShapeMismatch or DegenerateScale.
double dac(const PointmapSet& pred, const PointmapSet& gt, double tau);

struct MetricsReport {
    double chamfer = 0.0;  // normalized space, ×100
    std::map<double, double> dac;
    std::size_t n_points_pred = 0;
    std::size_t n_points_gt = 0;
};

MetricsReport evaluate_pointmaps(const PointmapSet& pred, const PointmapSet& gt,
                                 const std::vector<double>& taus = {0.2});
/// Chamfer-only report for unordered point clouds.
MetricsReport evaluate_point_clouds(std::span<const Eigen::Vector3d> pred, std::span<const Eigen::Vector3d> gt);
std::string metrics_report_json(const MetricsReport& report);

// -- camera pose --------------------------------------------------------------

struct Correspondence2D3D {
    Eigen::Vector2d pixel;
    Eigen::Vector3d point;
};

struct RansacOptions {
    std::size_t iterations = 500;
    double inlier_px_threshold = 2.0;
    std::uint64_t seed = 0;
    std::size_t refine_iterations = 20;
};

struct PnpResult {
    Pose pose;
    std::vector<std::uint8_t> inliers;
    std::size_t inlier_count = 0;
    double mean_inlier_error_px = 0.0;
};

/// Six-point DLT hypotheses scored by inlier count (ties: lower mean inlier
/// reprojection error), refined on the consensus set by Gauss-Newton.
/// Throws InsufficientCorrespondences or DegenerateConfiguration.
PnpResult estimate_pose_pnp_ransac(std::span<const Correspondence2D3D> correspondences, const CameraIntrinsics& k,
                                   const RansacOptions& options = {});

/// DLT on exactly the given correspondences (>= 6), no refinement.
/// Throws DegenerateConfiguration.
Pose solve_pnp_dlt(std::span<const Correspondence2D3D> correspondences, const CameraIntrinsics& k);

/// Gauss-Newton on pixel reprojection error starting from `initial`.
Pose refine_pose(std::span<const Correspondence2D3D> correspondences, const CameraIntrinsics& k, const Pose& initial,
                 std::size_t iterations);

struct PoseErrors {
    double rre_deg = 0.0;
    double rte_deg = 0.0;

    double max_error() const { return rre_deg > rte_deg ? rre_deg : rte_deg; }
};

/// Geodesic angle between two rotations, in degrees.
double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

/// Angle between relative rotations and between relative translation
/// directions of (first → second) for predicted and ground-truth pairs.
PoseErrors relative_pose_errors(const Pose& pred_first, const Pose& pred_second, const Pose& gt_first,
                                const Pose& gt_second);

/// 100·(1 − mean over integer τ in [1, tau_max] of accuracy(τ)), where
/// accuracy(τ) is the fraction of pairs with max(RRE, RTE) <= τ.
/// Throws EmptyList.
double mean_average_error(std::span<const PoseErrors> errors, int tau_max = 30);

}  // namespace anchorsplat
