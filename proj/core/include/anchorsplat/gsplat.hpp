// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "anchorsplat/colmap_io.hpp"
#include "anchorsplat/geometry.hpp"

namespace anchorsplat {

/// Row-major H×W×3 float image with values nominally in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {}

    std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    Eigen::Vector3d pixel(std::size_t i) const { return {data[3 * i], data[3 * i + 1], data[3 * i + 2]}; }
    bool same_shape(const Image& other) const { return width == other.width && height == other.height; }
};

/// Isotropic pixel-aligned Gaussians. World std-dev is exp(log_scale) and
/// opacity is sigmoid(opacity_logit).
struct GaussianSet {
    std::vector<Eigen::Vector3d> means;
    std::vector<double> log_scale;
    std::vector<double> opacity_logit;
    std::vector<Eigen::Vector3d> color;
    // Row-major source pixel of each Gaussian when built from a pointmap.
    std::vector<std::uint32_t> source_pixel;
    bool frozen_shape = false;

    std::size_t size() const { return means.size(); }
    void append(const GaussianSet& other);
};

double sigmoid(double x);
double logit(double p);

/// One Gaussian per valid pixel, in row-major order; means are the pointmap
/// points and colors the clamped pixel colors. Throws EmptyPointmap or
/// ShapeMismatch.
GaussianSet pointmap_to_gaussians(std::span<const Eigen::Vector3d> points, std::span<const std::uint8_t> valid,
                                  const Image& image, double sigma0, double opacity0);

struct RasterSettings {
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
    // Skip pixels farther than 3 screen sigmas from the projected center.
    bool radius_cutoff = true;
    // Skip contributions with alpha below this.
    double min_alpha = 1.0 / 255.0;
    // Opt-in early exit once transmittance drops below this. Introduces an
    // error of at most the threshold times the color range per channel.
    std::optional<double> early_exit_transmittance;

    /// Cutoff and skip threshold disabled; every Gaussian in front of the
    /// camera contributes to every pixel.
    static RasterSettings exact(const Eigen::Vector3d& background = Eigen::Vector3d::Zero()) {
        RasterSettings s;
        s.background = background;
        s.radius_cutoff = false;
        s.min_alpha = 0.0;
        return s;
    }
};

/// Per-Gaussian screen-space footprint from the forward pass.
struct ProjectedGaussian {
    Eigen::Vector3d cam = Eigen::Vector3d::Zero();  // camera-frame mean
    double u = 0.0;
    double v = 0.0;
    double sigma_px = 0.0;
    double opacity = 0.0;
    bool visible = false;
};

struct Contribution {
    std::uint32_t gaussian = 0;
    double alpha = 0.0;
    double transmittance = 0.0;  // before this contribution
};

/// Reverse-mode tape: per-pixel front-to-back contribution lists in CSR form.
struct RenderAux {
    int width = 0;
    int height = 0;
    std::size_t num_gaussians = 0;
    Eigen::Vector3d background = Eigen::Vector3d::Zero();
    std::vector<ProjectedGaussian> projected;
    std::vector<std::uint32_t> offsets;  // pixels + 1
    std::vector<Contribution> contributions;
    std::vector<double> final_transmittance;

    std::span<const Contribution> pixel_contributions(std::size_t pixel) const {
        return {contributions.data() + offsets[pixel], contributions.data() + offsets[pixel + 1]};
    }
};

struct RenderResult {
    Image image;
    RenderAux aux;
};

/// Front-to-back alpha compositing of isotropic splats sorted by camera depth
/// (ties by index). Pixel (x, y) samples the image plane at (x, y).
RenderResult rasterize(const GaussianSet& gaussians, const CameraIntrinsics& k, const Pose& pose, int height, int width,
                       const RasterSettings& settings = {});

struct GaussianGrads {
    std::vector<Eigen::Vector3d> d_means;
    std::vector<double> d_log_scale;
    std::vector<double> d_opacity_logit;
    std::vector<Eigen::Vector3d> d_color;
};

/// Exact reverse pass through compositing and projection. Shape and color
/// gradients are zero when `gaussians.frozen_shape`. Throws AuxMismatch.
GaussianGrads rasterize_backward(const RenderAux& aux, const GaussianSet& gaussians, const CameraIntrinsics& k,
                                 const Pose& pose, const Image& dl_dimage);

struct RenderLossConfig {
    // Weight of the structural-similarity term (stands in for a perceptual loss).
    double w_perceptual = 0.0;
    int ssim_window = 7;
};

struct RenderLossValue {
    double value = 0.0;
    double pixel_term = 0.0;
    double perceptual_term = 0.0;
    Image grad;
};

/// Mean squared error over pixels and channels, plus w_perceptual·(1 − SSIM)
/// when enabled. Throws ShapeMismatch.
RenderLossValue render_loss(const Image& rendered, const Image& target, const RenderLossConfig& cfg = {});

/// Mean SSIM over box windows (per channel, averaged) and its gradient with
/// respect to `x`.
double ssim(const Image& x, const Image& y, int window, Image* grad_x = nullptr);

}  // namespace anchorsplat
