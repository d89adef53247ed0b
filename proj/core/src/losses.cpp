// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "anchorsplat/error.hpp"
#include "anchorsplat/random.hpp"

namespace anchorsplat {

LossValueAndGrads LossValueAndGrads::zeros_like(const PointmapSet& pointmaps) {
    LossValueAndGrads out;
    out.d_points.reserve(pointmaps.views.size());
    out.d_conf_raw.reserve(pointmaps.views.size());
    for (const auto& view : pointmaps.views) {
        out.d_points.emplace_back(view.points.size(), Eigen::Vector3d::Zero());
        out.d_conf_raw.emplace_back(view.conf_raw.size(), 0.0);
    }
    return out;
}

bool LossValueAndGrads::same_shape(const LossValueAndGrads& other) const {
    if (d_points.size() != other.d_points.size() || d_conf_raw.size() != other.d_conf_raw.size()) {
        return false;
    }
    for (std::size_t v = 0; v < d_points.size(); ++v) {
        if (d_points[v].size() != other.d_points[v].size()) {
            return false;
        }
    }
    for (std::size_t v = 0; v < d_conf_raw.size(); ++v) {
        if (d_conf_raw[v].size() != other.d_conf_raw[v].size()) {
            return false;
        }
    }
    return true;
}

double LossValueAndGrads::grad_norm() const {
    double sq = 0.0;
    for (const auto& view : d_points) {
        for (const auto& g : view) {
            sq += g.squaredNorm();
        }
    }
    for (const auto& view : d_conf_raw) {
        for (double g : view) {
            sq += g * g;
        }
    }
    return std::sqrt(sq);
}

bool LossValueAndGrads::all_finite() const {
    if (!std::isfinite(value)) {
        return false;
    }
    for (const auto& view : d_points) {
        for (const auto& g : view) {
            if (!g.allFinite()) {
                return false;
            }
        }
    }
    for (const auto& view : d_conf_raw) {
        for (double g : view) {
            if (!std::isfinite(g)) {
                return false;
            }
        }
    }
    return true;
}

double regr_residual(const Eigen::Vector3d& pred, const Eigen::Vector3d& anchor, double z, double z_bar) {
    return (pred / z - anchor / z_bar).norm();
}

namespace {

void check_anchor_shapes(const PointmapSet& pointmaps, std::span<const AnchorGrid> anchors) {
    if (anchors.size() != pointmaps.views.size()) {
        throw Error(ErrorCode::ShapeMismatch, "anchor grid count " + std::to_string(anchors.size()) +
                                                  " differs from view count " +
                                                  std::to_string(pointmaps.views.size()));
    }
    for (std::size_t v = 0; v < anchors.size(); ++v) {
        const auto& a = anchors[v];
        const auto& view = pointmaps.views[v];
        if (a.width != pointmaps.width || a.height != pointmaps.height || a.points.size() != view.points.size() ||
            a.mask.size() != view.points.size() || view.conf_raw.size() != view.points.size() ||
            view.valid.size() != view.points.size()) {
            throw Error(ErrorCode::ShapeMismatch, "anchor grid " + std::to_string(v) + " does not match pointmap");
        }
    }
}

}  // namespace

ScalePair anchor_scales(const PointmapSet& pointmaps, std::span<const AnchorGrid> anchors) {
    double pred_sum = 0.0;
    std::size_t pred_count = 0;
    for (const auto& view : pointmaps.views) {
        for (std::size_t i = 0; i < view.points.size(); ++i) {
            if (view.valid[i] != 0) {
                pred_sum += view.points[i].norm();
                ++pred_count;
            }
        }
    }
    double anchor_sum = 0.0;
    std::size_t anchor_count = 0;
    for (const auto& grid : anchors) {
        for (std::size_t i = 0; i < grid.points.size(); ++i) {
            if (grid.mask[i] != 0) {
                anchor_sum += grid.points[i].norm();
                ++anchor_count;
            }
        }
    }
    if (pred_count == 0 || anchor_count == 0 || !(pred_sum > 0.0) || !(anchor_sum > 0.0)) {
        throw Error(ErrorCode::DegenerateScale, "cannot normalize predicted or anchor points");
    }
    return {pred_sum / static_cast<double>(pred_count), anchor_sum / static_cast<double>(anchor_count)};
}

LossValueAndGrads anchor_loss(const PointmapSet& pointmaps, std::span<const AnchorGrid> anchors,
                              const AnchorLossConfig& cfg, const std::optional<ScalePair>& fixed_scales) {
    check_anchor_shapes(pointmaps, anchors);
    std::size_t total_anchored = 0;
    for (const auto& grid : anchors) {
        total_anchored += grid.anchored_count();
    }
    if (total_anchored == 0) {
        throw Error(ErrorCode::NoAnchors, "no view has an anchored pixel");
    }

    LossValueAndGrads out = LossValueAndGrads::zeros_like(pointmaps);
    ScalePair scales;
    if (fixed_scales) {
        scales = *fixed_scales;
    } else {
        try {
            scales = anchor_scales(pointmaps, anchors);
        } catch (const Error& e) {
            if (cfg.skip_degenerate && e.code() == ErrorCode::DegenerateScale) {
                return out;
            }
            throw;
        }
    }
    const double inv_z = 1.0 / scales.pred;
    const double inv_z_bar = 1.0 / scales.anchor;

    // Per-view partials reduced in view order.
    double value = 0.0;
    for (std::size_t v = 0; v < anchors.size(); ++v) {
        const auto& grid = anchors[v];
        const auto& view = pointmaps.views[v];
        double view_sum = 0.0;
        for (std::size_t i = 0; i < grid.mask.size(); ++i) {
            if (grid.mask[i] == 0) {
                continue;
            }
            const Eigen::Vector3d diff = view.points[i] * inv_z - grid.points[i] * inv_z_bar;
            const double residual = diff.norm();
            const double e = std::exp(view.conf_raw[i]);
            const double c = 1.0 + e;
            view_sum += c * residual - cfg.alpha * std::log(c);
            // d/dX (C ℓ) = C (diff/ℓ) / z ; zero subgradient at ℓ = 0.
            if (residual > 0.0) {
                out.d_points[v][i] = (c * inv_z / residual) * diff;
            }
            // d/draw (C ℓ − α log C) = (ℓ − α/C)·e
            out.d_conf_raw[v][i] = (residual - cfg.alpha / c) * e;
        }
        value += view_sum;
    }
    out.value = value;
    return out;
}

LossValueAndGrads hybrid_loss(const LossValueAndGrads& anchor, const LossValueAndGrads& render,
                              const std::optional<LossValueAndGrads>& sup, const HybridLossConfig& cfg) {
    if (!anchor.same_shape(render) || (sup && !anchor.same_shape(*sup))) {
        throw Error(ErrorCode::ShapeMismatch, "hybrid loss terms have different gradient shapes");
    }
    LossValueAndGrads out = anchor;
    out.value = cfg.w_anchor * anchor.value + cfg.w_render * render.value;
    if (sup) {
        out.value += cfg.w_sup * sup->value;
    }
    for (std::size_t v = 0; v < out.d_points.size(); ++v) {
        for (std::size_t i = 0; i < out.d_points[v].size(); ++i) {
            Eigen::Vector3d g = cfg.w_anchor * anchor.d_points[v][i] + cfg.w_render * render.d_points[v][i];
            if (sup) {
                g += cfg.w_sup * sup->d_points[v][i];
            }
            out.d_points[v][i] = g;
        }
    }
    for (std::size_t v = 0; v < out.d_conf_raw.size(); ++v) {
        for (std::size_t i = 0; i < out.d_conf_raw[v].size(); ++i) {
            double g = cfg.w_anchor * anchor.d_conf_raw[v][i] + cfg.w_render * render.d_conf_raw[v][i];
            if (sup) {
                g += cfg.w_sup * sup->d_conf_raw[v][i];
            }
            out.d_conf_raw[v][i] = g;
        }
    }
    return out;
}

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_diff_check(const ScalarFn& f, std::span<const double> params, std::span<const double> analytic,
                                  const GradCheckOptions& options) {
    if (!(options.h > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "finite-difference step must be positive");
    }
    if (analytic.size() != params.size()) {
        throw Error(ErrorCode::ShapeMismatch, "analytic gradient size differs from parameter count");
    }
    GradCheckReport report;
    if (params.empty() || options.probes == 0) {
        return report;
    }

    std::vector<std::size_t> order(params.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(options.seed, 0x67726164636b2121ULL);
    std::vector<std::size_t> picks;
    picks.reserve(options.probes);
    for (std::size_t k = 0; k < options.probes; ++k) {
        if (k < order.size()) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(order.size() - 1)));
            std::swap(order[k], order[j]);
            picks.push_back(order[k]);
        } else {
            picks.push_back(static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(order.size() - 1))));
        }
    }

    std::vector<double> probe(params.begin(), params.end());
    for (const std::size_t idx : picks) {
        const double original = probe[idx];
        probe[idx] = original + options.h;
        const double f_plus = f(probe);
        probe[idx] = original - options.h;
        const double f_minus = f(probe);
        probe[idx] = original;
        const double numeric = (f_plus - f_minus) / (2.0 * options.h);
        const double err = relative_error(analytic[idx], numeric);
        if (report.probes == 0 || err > report.max_rel_error) {
            report.max_rel_error = err;
            report.worst_index = idx;
            report.worst_analytic = analytic[idx];
            report.worst_numeric = numeric;
        }
        ++report.probes;
    }
    return report;
}

std::vector<double> pack_pointmap_params(const PointmapSet& pointmaps) {
    std::vector<double> out;
    for (const auto& view : pointmaps.views) {
        for (const auto& p : view.points) {
            out.insert(out.end(), {p.x(), p.y(), p.z()});
        }
        out.insert(out.end(), view.conf_raw.begin(), view.conf_raw.end());
    }
    return out;
}

void unpack_pointmap_params(std::span<const double> params, PointmapSet& pointmaps) {
    std::size_t k = 0;
    for (auto& view : pointmaps.views) {
        for (auto& p : view.points) {
            if (k + 3 > params.size()) {
                throw Error(ErrorCode::ShapeMismatch, "parameter vector too short");
            }
            p = Eigen::Vector3d(params[k], params[k + 1], params[k + 2]);
            k += 3;
        }
        for (auto& c : view.conf_raw) {
            if (k >= params.size()) {
                throw Error(ErrorCode::ShapeMismatch, "parameter vector too short");
            }
            c = params[k++];
        }
    }
    if (k != params.size()) {
        throw Error(ErrorCode::ShapeMismatch, "parameter vector too long");
    }
}

std::vector<double> pack_gradients(const LossValueAndGrads& grads) {
    std::vector<double> out;
    for (std::size_t v = 0; v < grads.d_points.size(); ++v) {
        for (const auto& g : grads.d_points[v]) {
            out.insert(out.end(), {g.x(), g.y(), g.z()});
        }
        out.insert(out.end(), grads.d_conf_raw[v].begin(), grads.d_conf_raw[v].end());
    }
    return out;
}

std::string loss_report_json(const LossValueAndGrads& anchor, const LossValueAndGrads& render,
                             const std::optional<LossValueAndGrads>& sup, const LossValueAndGrads& total) {
    nlohmann::ordered_json j;
    j["anchor"] = anchor.value;
    j["render"] = render.value;
    j["sup"] = sup ? nlohmann::ordered_json(sup->value) : nlohmann::ordered_json(nullptr);
    j["total"] = total.value;
    nlohmann::ordered_json norms;
    norms["anchor"] = anchor.grad_norm();
    norms["render"] = render.grad_norm();
    norms["sup"] = sup ? nlohmann::ordered_json(sup->grad_norm()) : nlohmann::ordered_json(nullptr);
    norms["total"] = total.grad_norm();
    j["grad_norms"] = norms;
    return j.dump(2);
}

}  // namespace anchorsplat
