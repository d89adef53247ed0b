// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "anchorsplat/error.hpp"

namespace anchorsplat {

Pose Pose::from_qvec(const std::array<double, 4>& qvec, const Eigen::Vector3d& t) {
    const Eigen::Quaterniond q(qvec[0], qvec[1], qvec[2], qvec[3]);
    return {q.normalized().toRotationMatrix(), t};
}

Pose Pose::inverse() const {
    const Eigen::Matrix3d rt = rotation.transpose();
    return {rt, -rt * translation};
}

Pose Pose::compose(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
}

Eigen::Matrix4d Pose::matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
}

bool is_valid_rotation(const Eigen::Matrix3d& r, double tol) {
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

std::optional<Projection> project_point(const CameraIntrinsics& k, const Pose& pose, const Eigen::Vector3d& p) {
    const Eigen::Vector3d c = pose.apply(p);
    if (!(c.z() > 0.0)) {
        return std::nullopt;
    }
    return Projection{k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy, c.z()};
}

Eigen::Vector3d unproject(const CameraIntrinsics& k, double u, double v, double depth) {
    return {(u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth};
}

SparseDepthMap render_sparse_depth(const SparseModel& model, std::uint32_t image_id,
                                   const SparseDepthOptions& options) {
    const auto img_it = model.images.find(image_id);
    if (img_it == model.images.end()) {
        throw Error(ErrorCode::UnknownImage, "image " + std::to_string(image_id) + " is not registered");
    }
    const ImageRecord& image = img_it->second;
    const CameraIntrinsics& cam = model.cameras.at(image.camera_id);
    const Pose pose = Pose::from_image(image);

    SparseDepthMap out;
    out.width = static_cast<int>(cam.width);
    out.height = static_cast<int>(cam.height);

    // Keyed by row-major pixel index so output order is deterministic.
    std::map<std::int64_t, DepthEntry> by_pixel;
    const auto consider = [&](const SparsePoint& pt) {
        if (options.max_reproj_error && pt.reproj_error > *options.max_reproj_error) {
            return;
        }
        const auto proj = project_point(cam, pose, pt.position);
        if (!proj) {
            return;
        }
        const double ur = std::round(proj->u);
        const double vr = std::round(proj->v);
        if (ur < 0.0 || vr < 0.0 || ur >= static_cast<double>(cam.width) || vr >= static_cast<double>(cam.height)) {
            return;
        }
        const DepthEntry entry{static_cast<int>(ur), static_cast<int>(vr), proj->depth, pt.point3d_id};
        const std::int64_t key = static_cast<std::int64_t>(entry.v) * out.width + entry.u;
        auto [it, inserted] = by_pixel.emplace(key, entry);
        if (!inserted && entry.depth < it->second.depth) {
            it->second = entry;
        }
    };

    if (options.visibility == Visibility::TrackOnly) {
        for (const auto& obs : image.observations) {
            if (obs.point3d_id == kNoPoint3D) {
                continue;
            }
            const auto pt_it = model.points.find(obs.point3d_id);
            if (pt_it != model.points.end()) {
                consider(pt_it->second);
            }
        }
    } else {
        for (const auto& [id, pt] : model.points) {
            consider(pt);
        }
    }

    out.entries.reserve(by_pixel.size());
    for (const auto& [key, entry] : by_pixel) {
        out.entries.push_back(entry);
    }
    return out;
}

std::size_t AnchorGrid::anchored_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

AnchorGrid anchor_pointmap_from_depth(const SparseDepthMap& depth, const CameraIntrinsics& k, const Pose& pose_v,
                                      const Pose& pose_ref) {
    AnchorGrid grid;
    grid.width = depth.width;
    grid.height = depth.height;
    const auto n = static_cast<std::size_t>(depth.width) * static_cast<std::size_t>(depth.height);
    grid.points.assign(n, Eigen::Vector3d::Zero());
    grid.mask.assign(n, 0);
    // camera v -> world -> reference camera
    const Pose v_to_ref = pose_ref.compose(pose_v.inverse());
    for (const auto& e : depth.entries) {
        const std::size_t idx = static_cast<std::size_t>(e.v) * static_cast<std::size_t>(depth.width) +
                                static_cast<std::size_t>(e.u);
        grid.points[idx] = v_to_ref.apply(unproject(k, e.u, e.v, e.depth));
        grid.mask[idx] = 1;
    }
    return grid;
}

double scale_norm(std::span<const Eigen::Vector3d> points, std::span<const std::uint8_t> mask) {
    if (!mask.empty() && mask.size() != points.size()) {
        throw Error(ErrorCode::ShapeMismatch, "scale_norm mask size differs from point count");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!mask.empty() && mask[i] == 0) {
            continue;
        }
        sum += points[i].norm();
        ++count;
    }
    if (count == 0 || !(sum > 0.0)) {
        throw Error(ErrorCode::DegenerateScale, "no valid non-zero points to normalize");
    }
    return sum / static_cast<double>(count);
}

}  // namespace anchorsplat
