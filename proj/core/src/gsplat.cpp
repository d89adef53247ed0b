// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/gsplat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "anchorsplat/error.hpp"

namespace anchorsplat {

void GaussianSet::append(const GaussianSet& other) {
    means.insert(means.end(), other.means.begin(), other.means.end());
    log_scale.insert(log_scale.end(), other.log_scale.begin(), other.log_scale.end());
    opacity_logit.insert(opacity_logit.end(), other.opacity_logit.begin(), other.opacity_logit.end());
    color.insert(color.end(), other.color.begin(), other.color.end());
    source_pixel.insert(source_pixel.end(), other.source_pixel.begin(), other.source_pixel.end());
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

GaussianSet pointmap_to_gaussians(std::span<const Eigen::Vector3d> points, std::span<const std::uint8_t> valid,
                                  const Image& image, double sigma0, double opacity0) {
    if (points.size() != image.pixels() || (!valid.empty() && valid.size() != points.size())) {
        throw Error(ErrorCode::ShapeMismatch, "pointmap and image sizes differ");
    }
    if (!(sigma0 > 0.0) || !(opacity0 > 0.0 && opacity0 < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "sigma0 must be > 0 and opacity0 in (0, 1)");
    }
    GaussianSet g;
    const double log_s = std::log(sigma0);
    const double o_logit = logit(opacity0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!valid.empty() && valid[i] == 0) {
            continue;
        }
        g.means.push_back(points[i]);
        g.log_scale.push_back(log_s);
        g.opacity_logit.push_back(o_logit);
        g.color.push_back(image.pixel(i).cwiseMax(0.0).cwiseMin(1.0));
        g.source_pixel.push_back(static_cast<std::uint32_t>(i));
    }
    if (g.means.empty()) {
        throw Error(ErrorCode::EmptyPointmap, "pointmap has no valid pixel");
    }
    return g;
}

RenderResult rasterize(const GaussianSet& gaussians, const CameraIntrinsics& k, const Pose& pose, int height, int width,
                       const RasterSettings& settings) {
    if (height <= 0 || width <= 0) {
        throw Error(ErrorCode::ShapeMismatch, "image dimensions must be positive");
    }
    const std::size_t n = gaussians.size();
    const std::size_t pixels = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    const double f_mean = 0.5 * (k.fx + k.fy);

    RenderResult result;
    RenderAux& aux = result.aux;
    aux.width = width;
    aux.height = height;
    aux.num_gaussians = n;
    aux.background = settings.background;
    aux.projected.resize(n);

    std::vector<std::uint32_t> order;
    order.reserve(n);
    for (std::size_t g = 0; g < n; ++g) {
        ProjectedGaussian& p = aux.projected[g];
        p.cam = pose.apply(gaussians.means[g]);
        if (!(p.cam.z() > 0.0)) {
            continue;
        }
        p.u = k.fx * p.cam.x() / p.cam.z() + k.cx;
        p.v = k.fy * p.cam.y() / p.cam.z() + k.cy;
        p.sigma_px = f_mean * std::exp(gaussians.log_scale[g]) / p.cam.z();
        p.opacity = sigmoid(gaussians.opacity_logit[g]);
        p.visible = true;
        order.push_back(static_cast<std::uint32_t>(g));
    }
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return aux.projected[a].cam.z() < aux.projected[b].cam.z();
    });

    // Bucket (gaussian, alpha) per pixel in depth order.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> lists(pixels);
    for (const std::uint32_t g : order) {
        const ProjectedGaussian& p = aux.projected[g];
        const double inv_two_var = 1.0 / (2.0 * p.sigma_px * p.sigma_px);
        int x0 = 0;
        int x1 = width - 1;
        int y0 = 0;
        int y1 = height - 1;
        const double radius = 3.0 * p.sigma_px;
        if (settings.radius_cutoff) {
            const double wd = static_cast<double>(width);
            const double hd = static_cast<double>(height);
            x0 = static_cast<int>(std::ceil(std::clamp(p.u - radius, -1.0, wd)));
            x1 = static_cast<int>(std::floor(std::clamp(p.u + radius, -1.0, wd)));
            y0 = static_cast<int>(std::ceil(std::clamp(p.v - radius, -1.0, hd)));
            y1 = static_cast<int>(std::floor(std::clamp(p.v + radius, -1.0, hd)));
            x0 = std::max(x0, 0);
            y0 = std::max(y0, 0);
            x1 = std::min(x1, width - 1);
            y1 = std::min(y1, height - 1);
        }
        for (int y = y0; y <= y1; ++y) {
            const double dy = y - p.v;
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - p.u;
                const double r2 = dx * dx + dy * dy;
                if (settings.radius_cutoff && r2 > radius * radius) {
                    continue;
                }
                const double alpha = p.opacity * std::exp(-r2 * inv_two_var);
                if (alpha < settings.min_alpha) {
                    continue;
                }
                lists[static_cast<std::size_t>(y) * width + x].emplace_back(g, alpha);
            }
        }
    }

    result.image = Image(width, height);
    aux.offsets.assign(pixels + 1, 0);
    aux.final_transmittance.assign(pixels, 1.0);
    std::size_t total = 0;
    for (const auto& list : lists) {
        total += list.size();
    }
    aux.contributions.reserve(total);
    for (std::size_t px = 0; px < pixels; ++px) {
        aux.offsets[px] = static_cast<std::uint32_t>(aux.contributions.size());
        double transmittance = 1.0;
        Eigen::Vector3d color = Eigen::Vector3d::Zero();
        for (const auto& [g, alpha] : lists[px]) {
            if (settings.early_exit_transmittance && transmittance < *settings.early_exit_transmittance) {
                break;
            }
            aux.contributions.push_back({g, alpha, transmittance});
            color += (transmittance * alpha) * gaussians.color[g];
            transmittance *= (1.0 - alpha);
        }
        color += transmittance * settings.background;
        aux.final_transmittance[px] = transmittance;
        for (int c = 0; c < 3; ++c) {
            result.image.data[3 * px + c] = color[c];
        }
    }
    aux.offsets[pixels] = static_cast<std::uint32_t>(aux.contributions.size());
    return result;
}

GaussianGrads rasterize_backward(const RenderAux& aux, const GaussianSet& gaussians, const CameraIntrinsics& k,
                                 const Pose& pose, const Image& dl_dimage) {
    const std::size_t n = gaussians.size();
    if (aux.num_gaussians != n || aux.projected.size() != n || dl_dimage.width != aux.width ||
        dl_dimage.height != aux.height || aux.offsets.size() != dl_dimage.pixels() + 1) {
        throw Error(ErrorCode::AuxMismatch, "render tape does not match the Gaussians or gradient image");
    }

    GaussianGrads grads;
    grads.d_means.assign(n, Eigen::Vector3d::Zero());
    grads.d_log_scale.assign(n, 0.0);
    grads.d_opacity_logit.assign(n, 0.0);
    grads.d_color.assign(n, Eigen::Vector3d::Zero());

    // Screen-space accumulators.
    std::vector<double> d_u(n, 0.0);
    std::vector<double> d_v(n, 0.0);
    std::vector<double> d_sigma_px(n, 0.0);

    const std::size_t pixels = dl_dimage.pixels();
    for (std::size_t px = 0; px < pixels; ++px) {
        const auto contribs = aux.pixel_contributions(px);
        if (contribs.empty()) {
            continue;
        }
        const Eigen::Vector3d g_pix = dl_dimage.pixel(px);
        if (g_pix.isZero(0.0)) {
            continue;
        }
        const double x = static_cast<double>(px % static_cast<std::size_t>(aux.width));
        const double y = static_cast<double>(px / static_cast<std::size_t>(aux.width));
        // Color seen behind the current splat, normalized by its transmittance.
        Eigen::Vector3d behind = aux.background;
        for (auto it = contribs.rbegin(); it != contribs.rend(); ++it) {
            const std::uint32_t g = it->gaussian;
            const double alpha = it->alpha;
            const double t = it->transmittance;
            const Eigen::Vector3d& c = gaussians.color[g];
            grads.d_color[g] += (t * alpha) * g_pix;
            const double d_alpha = t * (c - behind).dot(g_pix);
            behind = alpha * c + (1.0 - alpha) * behind;

            const ProjectedGaussian& p = aux.projected[g];
            const double inv_var = 1.0 / (p.sigma_px * p.sigma_px);
            const double dx = x - p.u;
            const double dy = y - p.v;
            const double r2 = dx * dx + dy * dy;
            d_u[g] += d_alpha * alpha * dx * inv_var;
            d_v[g] += d_alpha * alpha * dy * inv_var;
            d_sigma_px[g] += d_alpha * alpha * r2 * inv_var / p.sigma_px;
            grads.d_opacity_logit[g] += d_alpha * alpha * (1.0 - p.opacity);
        }
    }

    const Eigen::Matrix3d rt = pose.rotation.transpose();
    for (std::size_t g = 0; g < n; ++g) {
        const ProjectedGaussian& p = aux.projected[g];
        if (!p.visible) {
            continue;
        }
        const double z = p.cam.z();
        const double inv_z = 1.0 / z;
        grads.d_log_scale[g] = d_sigma_px[g] * p.sigma_px;
        Eigen::Vector3d d_cam;
        d_cam.x() = d_u[g] * k.fx * inv_z;
        d_cam.y() = d_v[g] * k.fy * inv_z;
        d_cam.z() = -d_u[g] * k.fx * p.cam.x() * inv_z * inv_z - d_v[g] * k.fy * p.cam.y() * inv_z * inv_z -
                    d_sigma_px[g] * p.sigma_px * inv_z;
        grads.d_means[g] = rt * d_cam;
    }

    if (gaussians.frozen_shape) {
        std::fill(grads.d_log_scale.begin(), grads.d_log_scale.end(), 0.0);
        std::fill(grads.d_opacity_logit.begin(), grads.d_opacity_logit.end(), 0.0);
        std::fill(grads.d_color.begin(), grads.d_color.end(), Eigen::Vector3d::Zero());
    }
    return grads;
}

double ssim(const Image& x, const Image& y, int window, Image* grad_x) {
    if (!x.same_shape(y)) {
        throw Error(ErrorCode::ShapeMismatch, "ssim inputs differ in shape");
    }
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const int w = std::max(1, std::min({window, x.width, x.height}));
    const int nx = x.width - w + 1;
    const int ny = x.height - w + 1;
    const double n_win = static_cast<double>(w) * w;
    const double n_total = static_cast<double>(nx) * ny * 3.0;
    if (grad_x != nullptr) {
        *grad_x = Image(x.width, x.height);
    }

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (int wy = 0; wy < ny; ++wy) {
            for (int wx = 0; wx < nx; ++wx) {
                double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
                for (int j = wy; j < wy + w; ++j) {
                    for (int i = wx; i < wx + w; ++i) {
                        const double a = x.at(i, j, c);
                        const double b = y.at(i, j, c);
                        sx += a;
                        sy += b;
                        sxx += a * a;
                        syy += b * b;
                        sxy += a * b;
                    }
                }
                const double mx = sx / n_win;
                const double my = sy / n_win;
                const double vx = sxx / n_win - mx * mx;
                const double vy = syy / n_win - my * my;
                const double cxy = sxy / n_win - mx * my;
                const double a1 = 2.0 * mx * my + c1;
                const double a2 = 2.0 * cxy + c2;
                const double b1 = mx * mx + my * my + c1;
                const double b2 = vx + vy + c2;
                const double s = (a1 * a2) / (b1 * b2);
                total += s;
                if (grad_x == nullptr) {
                    continue;
                }
                const double ds_dmx = (2.0 * my * a2) / (b1 * b2) - s * (2.0 * mx) / b1;
                const double ds_dvx = -s / b2;
                const double ds_dcxy = 2.0 * a1 / (b1 * b2);
                for (int j = wy; j < wy + w; ++j) {
                    for (int i = wx; i < wx + w; ++i) {
                        const double a = x.at(i, j, c);
                        const double b = y.at(i, j, c);
                        const double g = (ds_dmx + 2.0 * (a - mx) * ds_dvx + (b - my) * ds_dcxy) / n_win;
                        grad_x->at(i, j, c) += g / n_total;
                    }
                }
            }
        }
    }
    return total / n_total;
}

RenderLossValue render_loss(const Image& rendered, const Image& target, const RenderLossConfig& cfg) {
    if (!rendered.same_shape(target) || rendered.data.size() != target.data.size()) {
        throw Error(ErrorCode::ShapeMismatch, "rendered and target images differ in shape");
    }
    RenderLossValue out;
    out.grad = Image(rendered.width, rendered.height);
    const double count = static_cast<double>(rendered.data.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < rendered.data.size(); ++i) {
        const double d = rendered.data[i] - target.data[i];
        sq += d * d;
        out.grad.data[i] = 2.0 * d / count;
    }
    out.pixel_term = sq / count;
    out.value = out.pixel_term;
    if (cfg.w_perceptual > 0.0) {
        Image g;
        const double s = ssim(rendered, target, cfg.ssim_window, &g);
        out.perceptual_term = 1.0 - s;
        out.value += cfg.w_perceptual * out.perceptual_term;
        for (std::size_t i = 0; i < g.data.size(); ++i) {
            out.grad.data[i] -= cfg.w_perceptual * g.data[i];
        }
    }
    return out;
}

}  // namespace anchorsplat
