// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "anchorsplat/error.hpp"

namespace anchorsplat {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Eigen::Vector3d> points) : points_(points.begin(), points.end()) {
    index_.resize(points_.size());
    std::iota(index_.begin(), index_.end(), 0U);
    if (!points_.empty()) {
        nodes_.reserve(2 * points_.size() / kLeafSize + 1);
        build(0, static_cast<std::uint32_t>(points_.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end, -1, -1, -1, 0.0});
    if (end - begin <= kLeafSize) {
        return id;
    }
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (std::uint32_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[index_[i]]);
        hi = hi.cwiseMax(points_[index_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[index_[mid]][axis];
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::search(std::int32_t node_id, const Eigen::Vector3d& q, double& best_sq, std::size_t& best_idx) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
            const double d = (points_[index_[i]] - q).squaredNorm();
            if (d < best_sq || (d == best_sq && index_[i] < best_idx)) {
                best_sq = d;
                best_idx = index_[i];
            }
        }
        return;
    }
    const double delta = q[node.axis] - node.split;
    const std::int32_t near = delta < 0.0 ? node.left : node.right;
    const std::int32_t far = delta < 0.0 ? node.right : node.left;
    search(near, q, best_sq, best_idx);
    // Points equal to the split can sit on either side, hence <=.
    if (delta * delta <= best_sq) {
        search(far, q, best_sq, best_idx);
    }
}

std::size_t KdTree::nearest_index(const Eigen::Vector3d& query) const {
    if (points_.empty()) {
        throw Error(ErrorCode::EmptySet, "nearest neighbor query on an empty tree");
    }
    double best_sq = std::numeric_limits<double>::infinity();
    std::size_t best_idx = std::numeric_limits<std::size_t>::max();
    search(0, query, best_sq, best_idx);
    return best_idx;
}

double KdTree::nearest_distance(const Eigen::Vector3d& query) const {
    return (points_[nearest_index(query)] - query).norm();
}

namespace {

double directed_mean(const KdTree& tree, std::span<const Eigen::Vector3d> queries) {
    double sum = 0.0;
    for (const auto& q : queries) {
        sum += tree.nearest_distance(q);
    }
    return sum / static_cast<double>(queries.size());
}

}  // namespace

double chamfer(std::span<const Eigen::Vector3d> a, std::span<const Eigen::Vector3d> b) {
    if (a.empty() || b.empty()) {
        throw Error(ErrorCode::EmptySet, "chamfer distance needs two non-empty point sets");
    }
    const KdTree tree_a(a);
    const KdTree tree_b(b);
    return 0.5 * (directed_mean(tree_b, a) + directed_mean(tree_a, b));
}

namespace {

std::vector<Eigen::Vector3d> valid_points(const PointmapSet& pointmaps) {
    std::vector<Eigen::Vector3d> pts;
    for (const auto& view : pointmaps.views) {
        for (std::size_t i = 0; i < view.points.size(); ++i) {
            if (view.valid.empty() || view.valid[i] != 0) {
                pts.push_back(view.points[i]);
            }
        }
    }
    return pts;
}

}  // namespace

std::vector<Eigen::Vector3d> normalized_points(const PointmapSet& pointmaps) {
    auto pts = valid_points(pointmaps);
    const double z = scale_norm(pts);
    for (auto& p : pts) {
        p /= z;
    }
    return pts;
}

double dac(const PointmapSet& pred, const PointmapSet& gt, double tau) {
    if (!pred.same_shape(gt)) {
        throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth pointmaps differ in shape");
    }
    double pred_sum = 0.0;
    double gt_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < pred.views.size(); ++v) {
        for (std::size_t i = 0; i < pred.views[v].points.size(); ++i) {
            if (pred.views[v].valid[i] != 0 && gt.views[v].valid[i] != 0) {
                pred_sum += pred.views[v].points[i].norm();
                gt_sum += gt.views[v].points[i].norm();
                ++count;
            }
        }
    }
    if (count == 0 || !(pred_sum > 0.0) || !(gt_sum > 0.0)) {
        throw Error(ErrorCode::DegenerateScale, "cannot normalize pointmaps for DAc");
    }
    const double z = pred_sum / static_cast<double>(count);
    const double z_bar = gt_sum / static_cast<double>(count);
    std::size_t hits = 0;
    for (std::size_t v = 0; v < pred.views.size(); ++v) {
        for (std::size_t i = 0; i < pred.views[v].points.size(); ++i) {
            if (pred.views[v].valid[i] != 0 && gt.views[v].valid[i] != 0) {
                const double d = (pred.views[v].points[i] / z - gt.views[v].points[i] / z_bar).norm();
                if (d <= tau) {
                    ++hits;
                }
            }
        }
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(count);
}

MetricsReport evaluate_pointmaps(const PointmapSet& pred, const PointmapSet& gt, const std::vector<double>& taus) {
    if (!pred.same_shape(gt)) {
        throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth pointmaps differ in shape");
    }
    MetricsReport report;
    const auto p = normalized_points(pred);
    const auto g = normalized_points(gt);
    report.n_points_pred = p.size();
    report.n_points_gt = g.size();
    report.chamfer = 100.0 * chamfer(p, g);
    for (const double tau : taus) {
        report.dac[tau] = anchorsplat::dac(pred, gt, tau);
    }
    return report;
}

MetricsReport evaluate_point_clouds(std::span<const Eigen::Vector3d> pred, std::span<const Eigen::Vector3d> gt) {
    MetricsReport report;
    const double zp = scale_norm(pred);
    const double zg = scale_norm(gt);
    std::vector<Eigen::Vector3d> p(pred.begin(), pred.end());
    std::vector<Eigen::Vector3d> g(gt.begin(), gt.end());
    for (auto& x : p) {
        x /= zp;
    }
    for (auto& x : g) {
        x /= zg;
    }
    report.n_points_pred = p.size();
    report.n_points_gt = g.size();
    report.chamfer = 100.0 * chamfer(p, g);
    return report;
}

std::string metrics_report_json(const MetricsReport& report) {
    nlohmann::ordered_json j;
    j["chamfer"] = report.chamfer;
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (const auto& [tau, value] : report.dac) {
        char key[32];
        std::snprintf(key, sizeof(key), "%g", tau);
        d[key] = value;
    }
    j["dac"] = d;
    j["n_points_pred"] = report.n_points_pred;
    j["n_points_gt"] = report.n_points_gt;
    return j.dump(2);
}

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    // atan2 stays accurate near 0 and 180 degrees, unlike acos of the trace.
    const Eigen::Matrix3d r = a.transpose() * b;
    const Eigen::Vector3d axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    return std::atan2(0.5 * axis.norm(), 0.5 * (r.trace() - 1.0)) * 180.0 / std::numbers::pi;
}

PoseErrors relative_pose_errors(const Pose& pred_first, const Pose& pred_second, const Pose& gt_first,
                                const Pose& gt_second) {
    const Pose pred_rel = pred_second.compose(pred_first.inverse());
    const Pose gt_rel = gt_second.compose(gt_first.inverse());
    PoseErrors e;
    e.rre_deg = rotation_angle_deg(pred_rel.rotation, gt_rel.rotation);
    const double np = pred_rel.translation.norm();
    const double ng = gt_rel.translation.norm();
    if (np < 1e-9 || ng < 1e-9) {
        e.rte_deg = 0.0;
    } else {
        e.rte_deg = std::atan2(pred_rel.translation.cross(gt_rel.translation).norm(),
                               pred_rel.translation.dot(gt_rel.translation)) *
                    180.0 / std::numbers::pi;
    }
    return e;
}

double mean_average_error(std::span<const PoseErrors> errors, int tau_max) {
    if (errors.empty()) {
        throw Error(ErrorCode::EmptyList, "mAE needs at least one pose pair");
    }
    if (tau_max < 1) {
        throw Error(ErrorCode::InvalidConfig, "tau_max must be >= 1");
    }
    double acc_sum = 0.0;
    for (int tau = 1; tau <= tau_max; ++tau) {
        std::size_t ok = 0;
        for (const auto& e : errors) {
            if (e.max_error() <= static_cast<double>(tau)) {
                ++ok;
            }
        }
        acc_sum += static_cast<double>(ok) / static_cast<double>(errors.size());
    }
    return 100.0 * (1.0 - acc_sum / static_cast<double>(tau_max));
}

}  // namespace anchorsplat
