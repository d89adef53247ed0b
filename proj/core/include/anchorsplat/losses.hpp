// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "anchorsplat/geometry.hpp"
#include "anchorsplat/pointmap.hpp"

namespace anchorsplat {

struct AnchorLossConfig {
    double alpha = 0.2;
    // Return a zero loss instead of throwing DegenerateScale.
    bool skip_degenerate = false;
};

struct HybridLossConfig {
    double w_anchor = 1.0;
    double w_render = 1.0;
    double w_sup = 1.0;
};

/// A scalar loss with gradients shaped like a PointmapSet.
struct LossValueAndGrads {
    double value = 0.0;
    std::vector<std::vector<Eigen::Vector3d>> d_points;
    std::vector<std::vector<double>> d_conf_raw;

    static LossValueAndGrads zeros_like(const PointmapSet& pointmaps);
    bool same_shape(const LossValueAndGrads& other) const;
    double grad_norm() const;
    bool all_finite() const;
};

/// Normalizers for predicted (z) and anchor (z̄) points.
struct ScalePair {
    double pred = 1.0;
    double anchor = 1.0;
};

/// ‖X/z − X̄/z̄‖.
double regr_residual(const Eigen::Vector3d& pred, const Eigen::Vector3d& anchor, double z, double z_bar);

/// z over all valid predicted points, z̄ over all anchored points.
ScalePair anchor_scales(const PointmapSet& pointmaps, std::span<const AnchorGrid> anchors);

/// Σ_v Σ_{i anchored} C_i·ℓ_regr(v,i) − α·log C_i with C = 1 + exp(conf_raw).
///
/// The normalizers are held constant in the backward pass. Pass `fixed_scales`
/// to evaluate with given normalizers instead of recomputing them, which is
/// what a finite-difference check of that convention needs. Views whose grid
/// has no anchored pixel contribute nothing.
///
/// Throws ShapeMismatch, NoAnchors (no view has an anchor) or DegenerateScale.
LossValueAndGrads anchor_loss(const PointmapSet& pointmaps, std::span<const AnchorGrid> anchors,
                              const AnchorLossConfig& cfg = {},
                              const std::optional<ScalePair>& fixed_scales = std::nullopt);

/// Weighted sum w_anchor·anchor + w_render·render (+ w_sup·sup). Throws ShapeMismatch.
LossValueAndGrads hybrid_loss(const LossValueAndGrads& anchor, const LossValueAndGrads& render,
                              const std::optional<LossValueAndGrads>& sup, const HybridLossConfig& cfg);

// -- finite-difference validation -------------------------------------------

double relative_error(double analytic, double numeric);

struct GradCheckOptions {
    double h = 1e-5;
    std::size_t probes = 64;
    std::uint64_t seed = 0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t probes = 0;
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central differences at `probes` seeded coordinates compared against
/// `analytic`. Probes are drawn without replacement while coordinates last.
GradCheckReport finite_diff_check(const ScalarFn& f, std::span<const double> params, std::span<const double> analytic,
                                  const GradCheckOptions& options = {});

/// Points (x,y,z per pixel) then confidence logits, view by view.
std::vector<double> pack_pointmap_params(const PointmapSet& pointmaps);
void unpack_pointmap_params(std::span<const double> params, PointmapSet& pointmaps);
std::vector<double> pack_gradients(const LossValueAndGrads& grads);

/// {"anchor", "render", "sup", "total", "grad_norms"} as a JSON document.
std::string loss_report_json(const LossValueAndGrads& anchor, const LossValueAndGrads& render,
                             const std::optional<LossValueAndGrads>& sup, const LossValueAndGrads& total);

}  // namespace anchorsplat
