// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "anchorsplat/error.hpp"
#include "anchorsplat/geometry.hpp"
#include "anchorsplat/gsplat.hpp"
#include "anchorsplat/losses.hpp"
#include "anchorsplat/metrics.hpp"
#include "anchorsplat/pointmap.hpp"
#include "anchorsplat/random.hpp"

namespace anchorsplat {

// -- data mixing ----------------------------------------------------------------

/// video:anchor sampling ratio. The anchor share is anchor / (video + anchor).
struct MixSpec {
    int video = 30;
    int anchor = 1;

    double anchor_fraction() const { return static_cast<double>(anchor) / static_cast<double>(video + anchor); }
};

enum class BatchSource { Video, Anchor };

/// One seeded Bernoulli draw with P(Anchor) = anchor / (video + anchor).
BatchSource mixer_next(const MixSpec& mix, CounterRng& rng);

// -- synthetic scenes -------------------------------------------------------------

enum class SceneShape { Room, Slab, RandomHeightfield };

enum class InitKind { Noise, FrontoParallel };

struct SceneSpec {
    int n_context = 8;
    int n_target = 2;
    int height = 32;
    int width = 32;
    SceneShape shape = SceneShape::Slab;
    double anchor_fraction = 0.02;
    // Std-dev of the initial point perturbation, relative to the scene scale.
    double noise = 0.2;
    InitKind init = InitKind::Noise;
    // Screen footprint (std-dev, pixels) of ground-truth splats at the scene's
    // mean depth, and their opacity.
    double splat_footprint_px = 1.5;
    double splat_opacity = 0.95;
    // Distance from the first camera to the scene center and trajectory length.
    double scene_depth = 3.0;
    double baseline = 3.0;
    // Spatial frequency of the procedural albedo (radians per world unit).
    double texture_frequency = 1.0;

    int n_views() const { return n_context + n_target; }
};

/// Ground truth and initialization for one desk-scale optimization problem.
/// Frames are in temporal order; frame 0 is the reference camera, so its pose
/// is the identity and every pointmap lives in its frame.
struct SyntheticScene {
    SceneSpec spec;
    std::uint64_t seed = 0;
    CameraIntrinsics intrinsics;
    std::vector<Pose> frame_poses;          // reference -> camera, per frame
    std::vector<int> context_frames;        // frame positions of the context views
    std::vector<int> target_frames;         // interior frame positions
    PointmapSet gt_pointmaps;               // context views
    std::vector<Image> albedo;              // per context view, splat colors
    std::vector<Image> images;              // per frame, rendered from gt splats
    std::vector<AnchorGrid> anchors;        // per context view
    double gt_log_scale = 0.0;
    double gt_opacity_logit = 0.0;
    double scene_scale = 1.0;               // scale_norm of the gt points
    PointmapSet init_pointmaps;
};

/// Deterministic in (spec, seed). Throws InvalidSpec.
SyntheticScene synth_scene(const SceneSpec& spec, std::uint64_t seed);

/// World position of the analytic surface seen through pixel (x, y) of a
/// camera with the given pose; used to build ground truth.
std::optional<Eigen::Vector3d> cast_ray(const SceneSpec& spec, std::uint64_t seed, const CameraIntrinsics& k,
                                        const Pose& pose, double x, double y);

/// Splats for all context views with the given shared per-view shape parameters.
GaussianSet scene_gaussians(const SyntheticScene& scene, const PointmapSet& pointmaps,
                            const std::vector<double>& log_scale, const std::vector<double>& opacity_logit,
                            bool frozen_shape);

// -- optimization -------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizeConfig {
    HybridLossConfig hybrid;
    AnchorLossConfig anchor;
    RenderLossConfig render;
    RasterSettings raster;
    AdamConfig adam;
    int steps = 500;
    bool frozen_shape = true;
    // When set, Anchor draws add a supervised term against the dense ground
    // truth (weighted by hybrid.w_sup) on that step.
    std::optional<MixSpec> mix;
    std::uint64_t mix_seed = 0;
};

/// Per-view shared splat parameters.
struct GaussianShape {
    std::vector<double> log_scale;
    std::vector<double> opacity_logit;
};

struct OptimizationState {
    PointmapSet pointmaps;
    GaussianShape shape;
    int step = 0;
    // Adam moments, packed as pack_pointmap_params followed by the shape params.
    std::vector<double> m;
    std::vector<double> v;
};

OptimizationState initial_state(const SyntheticScene& scene);

struct ObjectiveValue {
    LossValueAndGrads anchor;
    LossValueAndGrads render;
    std::optional<LossValueAndGrads> sup;
    LossValueAndGrads total;
    // d total / d shape params (zero when frozen).
    std::vector<double> d_log_scale;
    std::vector<double> d_opacity_logit;
};

/// Anchor and render terms plus their weighted sum at `state`. Component
/// values are unweighted. `fixed_scales` pins the anchor normalizers.
ObjectiveValue evaluate_objective(const SyntheticScene& scene, const OptimizationState& state,
                                  const OptimizeConfig& cfg, bool include_sup = false,
                                  const std::optional<ScalePair>& fixed_scales = std::nullopt);

/// One Adam update from the gradients in `objective`.
void adam_step(OptimizationState& state, const ObjectiveValue& objective, const OptimizeConfig& cfg);

struct TraceRow {
    int step = 0;
    double anchor = 0.0;
    double render = 0.0;
    double total = 0.0;
    double grad_norm = 0.0;
    bool anchor_batch = false;
};

struct OptimizeResult {
    std::vector<TraceRow> trace;
    MetricsReport initial;
    MetricsReport final;
    OptimizationState state;
};

class DivergedLossError : public Error {
public:
    DivergedLossError(const std::string& message, std::vector<TraceRow> trace)
        : Error(ErrorCode::DivergedLoss, message), trace_(std::move(trace)) {}
    const std::vector<TraceRow>& trace() const { return trace_; }

private:
    std::vector<TraceRow> trace_;
};

/// Runs cfg.steps Adam updates from the scene's initialization. Throws
/// InvalidConfig for steps < 1 and DivergedLossError on a non-finite loss.
OptimizeResult optimize(const SyntheticScene& scene, const OptimizeConfig& cfg);

std::string trace_csv(const std::vector<TraceRow>& trace);

struct DescentProbe {
    double lr = 0.0;
    double before = 0.0;
    double after = 0.0;
    bool decreased = false;
};

/// Halves the learning rate from cfg.adam.lr until one Adam step lowers the
/// hybrid loss (normalizers pinned at their step-0 values), at most
/// `max_halvings` times.
DescentProbe probe_first_step_descent(const SyntheticScene& scene, const OptimizeConfig& cfg, int max_halvings = 30);

// -- ablation ------------------------------------------------------------------------

struct AblationArm {
    std::string name;
    std::vector<double> final_cd;     // per seed
    std::vector<double> initial_cd;   // per seed
    std::vector<TraceRow> first_rows; // step-0 trace row per seed
    std::vector<double> seconds;      // wall time per seed
    double mean_cd = 0.0;
};

struct AblationReport {
    std::vector<std::uint64_t> seeds;
    std::vector<AblationArm> arms;  // full, no_anchor, no_render, unfrozen
    // Per seed: full <= no_render < no_anchor.
    std::vector<bool> ordering_holds;
    // Per seed: full (frozen) CD <= 1.1 × unfrozen CD.
    std::vector<bool> frozen_within_tolerance;

    const AblationArm& arm(const std::string& name) const;
};

/// Runs the four arms on every seed with identical scenes and settings.
/// Arms run concurrently on up to `threads` workers.
AblationReport run_ablation(const SceneSpec& spec, const std::vector<std::uint64_t>& seeds, const OptimizeConfig& base,
                            int threads = 1);

std::string ablation_report_json(const AblationReport& report);

}  // namespace anchorsplat
