// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace anchorsplat {

/// COLMAP model ids for the supported pinhole-family cameras.
enum class CameraModel : int {
    SimplePinhole = 0,
    Pinhole = 1,
    SimpleRadial = 2,
};

std::string_view camera_model_name(CameraModel model);

struct CameraIntrinsics {
    std::uint32_t camera_id = 0;
    CameraModel model = CameraModel::Pinhole;
    std::uint64_t width = 0;
    std::uint64_t height = 0;
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    // SimpleRadial k1. Stored for round-trip only; projection ignores it.
    double radial = 0.0;

    bool operator==(const CameraIntrinsics&) const = default;
};

inline constexpr std::uint64_t kNoPoint3D = std::numeric_limits<std::uint64_t>::max();

struct Observation {
    double u = 0.0;
    double v = 0.0;
    std::uint64_t point3d_id = kNoPoint3D;

    bool operator==(const Observation&) const = default;
};

struct ImageRecord {
    std::uint32_t image_id = 0;
    std::uint32_t camera_id = 0;
    // World-to-camera rotation as a unit quaternion (w, x, y, z).
    std::array<double, 4> qvec{1.0, 0.0, 0.0, 0.0};
    // World-to-camera translation.
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    std::string name;
    std::vector<Observation> observations;

    bool operator==(const ImageRecord&) const = default;
};

struct TrackElement {
    std::uint32_t image_id = 0;
    std::uint32_t point2d_idx = 0;

    bool operator==(const TrackElement&) const = default;
};

struct SparsePoint {
    std::uint64_t point3d_id = 0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    std::array<std::uint8_t, 3> color{0, 0, 0};
    double reproj_error = 0.0;
    std::vector<TrackElement> track;

    bool operator==(const SparsePoint&) const = default;
};

struct SparseModel {
    std::map<std::uint32_t, CameraIntrinsics> cameras;
    std::map<std::uint32_t, ImageRecord> images;
    std::map<std::uint64_t, SparsePoint> points;

    /// True when some camera carries a radial term that projection drops.
    bool has_lossy_radial() const;

    const ImageRecord* find_image_by_name(const std::string& name) const;

    bool operator==(const SparseModel&) const = default;
};

enum class ModelFormat { Binary, Text, Auto };

/// Loads cameras/images/points3D from `directory`. Throws Error with
/// MissingFile, MalformedRecord or ReferentialIntegrity. Non-fatal oddities
/// (principal point outside the image) are appended to `warnings`.
SparseModel load_model(const std::filesystem::path& directory, ModelFormat format = ModelFormat::Auto,
                       std::vector<std::string>* warnings = nullptr);

/// Writes the three model files. Binary output is byte-stable. Throws IoFailure.
void save_model(const SparseModel& model, const std::filesystem::path& directory, ModelFormat format);

/// Checks every type and cross-reference invariant; throws on the first violation.
void validate_model(const SparseModel& model, std::vector<std::string>* warnings = nullptr);

}  // namespace anchorsplat
