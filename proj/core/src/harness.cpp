// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "anchorsplat/trajectory.hpp"

namespace anchorsplat {

namespace {

constexpr std::uint64_t kSurfaceStream = 0x7375726661636521ULL;
constexpr std::uint64_t kTextureStream = 0x7465787475726521ULL;
constexpr std::uint64_t kAnchorStream = 0x616e63686f722121ULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365212121ULL;
constexpr std::uint64_t kMixStream = 0x6d69786572212121ULL;

struct Wave {
    Eigen::Vector3d dir;
    double freq;
    double phase;
    double amp;
};

std::vector<Wave> height_waves(std::uint64_t seed) {
    CounterRng rng(seed, kSurfaceStream);
    std::vector<Wave> waves(4);
    for (auto& w : waves) {
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.dir = {std::cos(theta), std::sin(theta), 0.0};
        w.freq = rng.uniform(1.0, 2.5);
        w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.amp = rng.uniform(0.04, 0.08);
    }
    return waves;
}

double height_at(const std::vector<Wave>& waves, double x, double y) {
    double h = 0.0;
    for (const auto& w : waves) {
        h += w.amp * std::sin(w.freq * (w.dir.x() * x + w.dir.y() * y) + w.phase);
    }
    return h;
}

// Two sinusoids per channel along seeded directions.
struct Texture {
    std::array<std::array<Wave, 2>, 3> waves;

    Texture(std::uint64_t seed, double frequency) {
        CounterRng rng(seed, kTextureStream);
        for (auto& channel : waves) {
            for (std::size_t k = 0; k < channel.size(); ++k) {
                Eigen::Vector3d d(rng.normal(), rng.normal(), rng.normal());
                channel[k].dir = d.normalized();
                channel[k].freq = frequency * (k == 0 ? 1.0 : 2.3) * rng.uniform(0.8, 1.2);
                channel[k].phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
                channel[k].amp = k == 0 ? 0.28 : 0.17;
            }
        }
    }

    Eigen::Vector3d operator()(const Eigen::Vector3d& p) const {
        Eigen::Vector3d c;
        for (int ch = 0; ch < 3; ++ch) {
            double value = 0.5;
            for (const auto& w : waves[ch]) {
                value += w.amp * std::sin(w.freq * w.dir.dot(p) + w.phase);
            }
            c[ch] = value;
        }
        return c;
    }
};

Pose look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
    const Eigen::Vector3d z = (target - center).normalized();
    const Eigen::Vector3d down(0.0, 1.0, 0.0);
    const Eigen::Vector3d x = down.cross(z).normalized();
    const Eigen::Vector3d y = z.cross(x);
    Pose pose;
    pose.rotation.row(0) = x.transpose();
    pose.rotation.row(1) = y.transpose();
    pose.rotation.row(2) = z.transpose();
    pose.translation = -pose.rotation * center;
    return pose;
}

void validate_spec(const SceneSpec& spec) {
    if (spec.n_context < 2 || spec.n_target < 1 || spec.n_views() < 3) {
        throw Error(ErrorCode::InvalidSpec, "scene needs at least 2 context views and 1 target view");
    }
    if (spec.height < 4 || spec.width < 4) {
        throw Error(ErrorCode::InvalidSpec, "scene resolution must be at least 4x4");
    }
    if (!(spec.anchor_fraction > 0.0 && spec.anchor_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidSpec, "anchor_fraction must be in (0, 1]");
    }
    if (!(spec.noise >= 0.0) || !(spec.splat_footprint_px > 0.0) ||
        !(spec.splat_opacity > 0.0 && spec.splat_opacity < 1.0) || !(spec.scene_depth > 0.0) ||
        !(spec.baseline >= 0.0) || !(spec.texture_frequency > 0.0)) {
        throw Error(ErrorCode::InvalidSpec, "scene parameters out of range");
    }
}

// Gaussians for every context view plus the view each one came from.
GaussianSet build_gaussians(const SyntheticScene& scene, const PointmapSet& pointmaps, const GaussianShape& shape,
                            bool frozen, std::vector<std::uint32_t>* view_of) {
    GaussianSet all;
    for (std::size_t v = 0; v < pointmaps.views.size(); ++v) {
        const auto& view = pointmaps.views[v];
        for (std::size_t i = 0; i < view.points.size(); ++i) {
            if (view.valid[i] == 0) {
                continue;
            }
            all.means.push_back(view.points[i]);
            all.log_scale.push_back(shape.log_scale[v]);
            all.opacity_logit.push_back(shape.opacity_logit[v]);
            all.color.push_back(scene.albedo[v].pixel(i).cwiseMax(0.0).cwiseMin(1.0));
            all.source_pixel.push_back(static_cast<std::uint32_t>(i));
            if (view_of != nullptr) {
                view_of->push_back(static_cast<std::uint32_t>(v));
            }
        }
    }
    all.frozen_shape = frozen;
    return all;
}

double vector_norm_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) {
        s += x * x;
    }
    return s;
}

}  // namespace

BatchSource mixer_next(const MixSpec& mix, CounterRng& rng) {
    if (mix.video < 1 || mix.anchor < 1) {
        throw Error(ErrorCode::InvalidConfig, "mixing ratio entries must be >= 1");
    }
    return rng.bernoulli(mix.anchor_fraction()) ? BatchSource::Anchor : BatchSource::Video;
}

std::optional<Eigen::Vector3d> cast_ray(const SceneSpec& spec, std::uint64_t seed, const CameraIntrinsics& k,
                                        const Pose& pose, double x, double y) {
    const Eigen::Vector3d origin = pose.center();
    const Eigen::Vector3d dir =
        pose.rotation.transpose() * Eigen::Vector3d((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
    const double depth = spec.scene_depth;
    switch (spec.shape) {
        case SceneShape::Slab: {
            if (dir.z() <= 1e-12) {
                return std::nullopt;
            }
            const double t = (depth - origin.z()) / dir.z();
            if (t <= 0.0) {
                return std::nullopt;
            }
            return origin + t * dir;
        }
        case SceneShape::Room: {
            const Eigen::Vector3d lo(-0.55 * depth, -0.45 * depth, -0.5 * depth);
            const Eigen::Vector3d hi(0.55 * depth + spec.baseline, 0.45 * depth, 1.15 * depth);
            double t = std::numeric_limits<double>::infinity();
            for (int a = 0; a < 3; ++a) {
                if (dir[a] > 1e-12) {
                    t = std::min(t, (hi[a] - origin[a]) / dir[a]);
                } else if (dir[a] < -1e-12) {
                    t = std::min(t, (lo[a] - origin[a]) / dir[a]);
                }
            }
            if (!std::isfinite(t) || t <= 0.0) {
                return std::nullopt;
            }
            return origin + t * dir;
        }
        case SceneShape::RandomHeightfield: {
            const auto waves = height_waves(seed);
            const auto g = [&](double t) {
                const Eigen::Vector3d p = origin + t * dir;
                return p.z() - depth - height_at(waves, p.x(), p.y());
            };
            const double step = 0.02 * depth;
            double t0 = 1e-6;
            double g0 = g(t0);
            for (double t1 = step; t1 < 20.0 * depth; t1 += step) {
                const double g1 = g(t1);
                if ((g0 < 0.0) != (g1 < 0.0)) {
                    double a = t0;
                    double b = t1;
                    for (int it = 0; it < 80; ++it) {
                        const double m = 0.5 * (a + b);
                        if ((g(m) < 0.0) == (g0 < 0.0)) {
                            a = m;
                        } else {
                            b = m;
                        }
                    }
                    return origin + 0.5 * (a + b) * dir;
                }
                t0 = t1;
                g0 = g1;
            }
            return std::nullopt;
        }
    }
    return std::nullopt;
}

SyntheticScene synth_scene(const SceneSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    SyntheticScene scene;
    scene.spec = spec;
    scene.seed = seed;

    const int h = spec.height;
    const int w = spec.width;
    auto& k = scene.intrinsics;
    k.camera_id = 1;
    k.model = CameraModel::Pinhole;
    k.width = static_cast<std::uint64_t>(w);
    k.height = static_cast<std::uint64_t>(h);
    k.fx = static_cast<double>(w);
    k.fy = static_cast<double>(w);
    k.cx = 0.5 * (w - 1);
    k.cy = 0.5 * (h - 1);

    // Smooth arc looking at the scene center on the first camera's axis.
    const int m = spec.n_views();
    const Eigen::Vector3d target(0.0, 0.0, spec.scene_depth);
    for (int f = 0; f < m; ++f) {
        const double s = static_cast<double>(f) / static_cast<double>(m - 1);
        const Eigen::Vector3d c(spec.baseline * s, 0.25 * spec.baseline * std::sin(std::numbers::pi * s), 0.0);
        scene.frame_poses.push_back(look_at(c, target));
    }

    Trajectory traj;
    traj.video_id = "synthetic";
    for (int f = 0; f < m; ++f) {
        traj.frame_indices.push_back(f);
    }
    const Clip clip = split_context_target(traj, static_cast<std::size_t>(spec.n_context),
                                           static_cast<std::size_t>(spec.n_target), seed);
    for (const auto i : clip.context_indices) {
        scene.context_frames.push_back(static_cast<int>(i));
    }
    for (const auto i : clip.target_indices) {
        scene.target_frames.push_back(static_cast<int>(i));
    }

    const Texture texture(seed, spec.texture_frequency);
    scene.gt_pointmaps = PointmapSet::zeros(scene.context_frames.size(), h, w);
    for (std::size_t v = 0; v < scene.context_frames.size(); ++v) {
        const Pose& pose = scene.frame_poses[static_cast<std::size_t>(scene.context_frames[v])];
        auto& view = scene.gt_pointmaps.views[v];
        Image albedo(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const auto hit = cast_ray(spec, seed, k, pose, x, y);
                if (!hit) {
                    view.valid[i] = 0;
                    continue;
                }
                view.points[i] = *hit;
                const Eigen::Vector3d c = texture(*hit);
                for (int ch = 0; ch < 3; ++ch) {
                    albedo.at(x, y, ch) = c[ch];
                }
            }
        }
        scene.albedo.push_back(std::move(albedo));
    }

    std::vector<Eigen::Vector3d> all_pts;
    std::vector<std::uint8_t> all_valid;
    for (const auto& view : scene.gt_pointmaps.views) {
        all_pts.insert(all_pts.end(), view.points.begin(), view.points.end());
        all_valid.insert(all_valid.end(), view.valid.begin(), view.valid.end());
    }
    scene.scene_scale = scale_norm(all_pts, all_valid);

    scene.gt_log_scale = std::log(spec.splat_footprint_px * spec.scene_depth / k.fx);
    scene.gt_opacity_logit = logit(spec.splat_opacity);
    const std::size_t n_ctx = scene.context_frames.size();
    const GaussianShape gt_shape{std::vector<double>(n_ctx, scene.gt_log_scale),
                                 std::vector<double>(n_ctx, scene.gt_opacity_logit)};
    const GaussianSet gt_splats = build_gaussians(scene, scene.gt_pointmaps, gt_shape, true, nullptr);
    for (int f = 0; f < m; ++f) {
        scene.images.push_back(
            rasterize(gt_splats, k, scene.frame_poses[static_cast<std::size_t>(f)], h, w, RasterSettings{}).image);
    }

    // Anchors: a seeded subset of valid pixels per context view, at the gt points.
    const std::size_t pixels = scene.gt_pointmaps.pixels();
    for (std::size_t v = 0; v < n_ctx; ++v) {
        const auto& view = scene.gt_pointmaps.views[v];
        AnchorGrid grid;
        grid.width = w;
        grid.height = h;
        grid.points.assign(pixels, Eigen::Vector3d::Zero());
        grid.mask.assign(pixels, 0);
        std::vector<std::size_t> candidates;
        for (std::size_t i = 0; i < pixels; ++i) {
            if (view.valid[i] != 0) {
                candidates.push_back(i);
            }
        }
        if (candidates.empty()) {
            throw Error(ErrorCode::InvalidSpec, "a context view sees no surface");
        }
        const auto count = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(spec.anchor_fraction * static_cast<double>(pixels))), 1,
            candidates.size());
        CounterRng rng(seed, kAnchorStream + v);
        for (std::size_t j = 0; j < count; ++j) {
            const auto r = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(j), static_cast<std::int64_t>(candidates.size() - 1)));
            std::swap(candidates[j], candidates[r]);
            grid.mask[candidates[j]] = 1;
            grid.points[candidates[j]] = view.points[candidates[j]];
        }
        scene.anchors.push_back(std::move(grid));
    }

    scene.init_pointmaps = scene.gt_pointmaps;
    if (spec.init == InitKind::Noise) {
        CounterRng rng(seed, kNoiseStream);
        const double sigma = spec.noise * scene.scene_scale;
        for (auto& view : scene.init_pointmaps.views) {
            for (auto& p : view.points) {
                const double nx = rng.normal();
                const double ny = rng.normal();
                const double nz = rng.normal();
                p += sigma * Eigen::Vector3d(nx, ny, nz);
            }
        }
    } else {
        for (std::size_t v = 0; v < n_ctx; ++v) {
            const Pose& pose = scene.frame_poses[static_cast<std::size_t>(scene.context_frames[v])];
            auto& view = scene.init_pointmaps.views[v];
            double depth_sum = 0.0;
            std::size_t n = 0;
            for (std::size_t i = 0; i < pixels; ++i) {
                if (view.valid[i] != 0) {
                    depth_sum += pose.apply(view.points[i]).z();
                    ++n;
                }
            }
            const double d = depth_sum / static_cast<double>(n);
            const Pose inv = pose.inverse();
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    view.points[i] = inv.apply(unproject(k, x, y, d));
                }
            }
        }
    }
    return scene;
}

GaussianSet scene_gaussians(const SyntheticScene& scene, const PointmapSet& pointmaps,
                            const std::vector<double>& log_scale, const std::vector<double>& opacity_logit,
                            bool frozen_shape) {
    if (log_scale.size() != pointmaps.views.size() || opacity_logit.size() != pointmaps.views.size() ||
        scene.albedo.size() != pointmaps.views.size()) {
        throw Error(ErrorCode::ShapeMismatch, "per-view splat parameters do not match the pointmaps");
    }
    return build_gaussians(scene, pointmaps, GaussianShape{log_scale, opacity_logit}, frozen_shape, nullptr);
}

OptimizationState initial_state(const SyntheticScene& scene) {
    OptimizationState state;
    state.pointmaps = scene.init_pointmaps;
    const std::size_t n = scene.init_pointmaps.views.size();
    state.shape.log_scale.assign(n, scene.gt_log_scale);
    state.shape.opacity_logit.assign(n, scene.gt_opacity_logit);
    return state;
}

ObjectiveValue evaluate_objective(const SyntheticScene& scene, const OptimizationState& state,
                                  const OptimizeConfig& cfg, bool include_sup,
                                  const std::optional<ScalePair>& fixed_scales) {
    ObjectiveValue out;
    out.anchor = anchor_loss(state.pointmaps, scene.anchors, cfg.anchor, fixed_scales);

    const std::size_t n_views = state.pointmaps.views.size();
    out.render = LossValueAndGrads::zeros_like(state.pointmaps);
    out.d_log_scale.assign(n_views, 0.0);
    out.d_opacity_logit.assign(n_views, 0.0);
    std::vector<std::uint32_t> view_of;
    const GaussianSet g = build_gaussians(scene, state.pointmaps, state.shape, cfg.frozen_shape, &view_of);
    const double inv_frames = 1.0 / static_cast<double>(scene.images.size());
    for (std::size_t f = 0; f < scene.images.size(); ++f) {
        const RenderResult rr =
            rasterize(g, scene.intrinsics, scene.frame_poses[f], state.pointmaps.height, state.pointmaps.width, cfg.raster);
        RenderLossValue rl = render_loss(rr.image, scene.images[f], cfg.render);
        out.render.value += inv_frames * rl.value;
        for (auto& x : rl.grad.data) {
            x *= inv_frames;
        }
        const GaussianGrads gg = rasterize_backward(rr.aux, g, scene.intrinsics, scene.frame_poses[f], rl.grad);
        for (std::size_t i = 0; i < g.size(); ++i) {
            out.render.d_points[view_of[i]][g.source_pixel[i]] += gg.d_means[i];
            out.d_log_scale[view_of[i]] += gg.d_log_scale[i];
            out.d_opacity_logit[view_of[i]] += gg.d_opacity_logit[i];
        }
    }

    if (include_sup) {
        std::vector<AnchorGrid> dense;
        for (const auto& view : scene.gt_pointmaps.views) {
            AnchorGrid grid;
            grid.width = scene.gt_pointmaps.width;
            grid.height = scene.gt_pointmaps.height;
            grid.points = view.points;
            grid.mask = view.valid;
            dense.push_back(std::move(grid));
        }
        out.sup = anchor_loss(state.pointmaps, dense, cfg.anchor);
    }

    out.total = hybrid_loss(out.anchor, out.render, out.sup, cfg.hybrid);
    for (std::size_t v = 0; v < n_views; ++v) {
        out.d_log_scale[v] *= cfg.hybrid.w_render;
        out.d_opacity_logit[v] *= cfg.hybrid.w_render;
    }
    return out;
}

void adam_step(OptimizationState& state, const ObjectiveValue& objective, const OptimizeConfig& cfg) {
    std::vector<double> params = pack_pointmap_params(state.pointmaps);
    std::vector<double> grads = pack_gradients(objective.total);
    const std::size_t n_pm = params.size();
    params.insert(params.end(), state.shape.log_scale.begin(), state.shape.log_scale.end());
    params.insert(params.end(), state.shape.opacity_logit.begin(), state.shape.opacity_logit.end());
    grads.insert(grads.end(), objective.d_log_scale.begin(), objective.d_log_scale.end());
    grads.insert(grads.end(), objective.d_opacity_logit.begin(), objective.d_opacity_logit.end());
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    ++state.step;
    const auto& a = cfg.adam;
    const double bc1 = 1.0 - std::pow(a.beta1, state.step);
    const double bc2 = 1.0 - std::pow(a.beta2, state.step);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = a.beta1 * state.m[i] + (1.0 - a.beta1) * grads[i];
        state.v[i] = a.beta2 * state.v[i] + (1.0 - a.beta2) * grads[i] * grads[i];
        params[i] -= a.lr * (state.m[i] / bc1) / (std::sqrt(state.v[i] / bc2) + a.eps);
    }
    unpack_pointmap_params(std::span<const double>(params.data(), n_pm), state.pointmaps);
    const std::size_t n = state.shape.log_scale.size();
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(n_pm), n, state.shape.log_scale.begin());
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(n_pm + n), n, state.shape.opacity_logit.begin());
}

namespace {

bool state_is_finite(const OptimizationState& state) {
    for (const auto& view : state.pointmaps.views) {
        for (const auto& p : view.points) {
            if (!p.allFinite()) {
                return false;
            }
        }
        for (double c : view.conf_raw) {
            if (!std::isfinite(c)) {
                return false;
            }
        }
    }
    for (std::size_t v = 0; v < state.shape.log_scale.size(); ++v) {
        if (!std::isfinite(state.shape.log_scale[v]) || !std::isfinite(state.shape.opacity_logit[v])) {
            return false;
        }
    }
    return true;
}

}  // namespace

OptimizeResult optimize(const SyntheticScene& scene, const OptimizeConfig& cfg) {
    if (cfg.steps < 1) {
        throw Error(ErrorCode::InvalidConfig, "steps must be >= 1");
    }
    if (!(cfg.adam.lr >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "learning rate must be non-negative");
    }
    OptimizeResult result;
    result.state = initial_state(scene);
    result.initial = evaluate_pointmaps(result.state.pointmaps, scene.gt_pointmaps);
    CounterRng mix_rng(cfg.mix_seed, kMixStream);
    for (int s = 0; s < cfg.steps; ++s) {
        const bool anchor_batch = cfg.mix && mixer_next(*cfg.mix, mix_rng) == BatchSource::Anchor;
        const ObjectiveValue obj = evaluate_objective(scene, result.state, cfg, anchor_batch);
        TraceRow row;
        row.step = s;
        row.anchor = obj.anchor.value;
        row.render = obj.render.value;
        row.total = obj.total.value;
        row.grad_norm = std::sqrt(std::pow(obj.total.grad_norm(), 2) + vector_norm_sq(obj.d_log_scale) +
                                  vector_norm_sq(obj.d_opacity_logit));
        row.anchor_batch = anchor_batch;
        result.trace.push_back(row);
        if (!std::isfinite(row.total) || !std::isfinite(row.grad_norm)) {
            throw DivergedLossError("non-finite loss at step " + std::to_string(s), result.trace);
        }
        adam_step(result.state, obj, cfg);
        if (!state_is_finite(result.state)) {
            throw DivergedLossError("non-finite parameters after step " + std::to_string(s), result.trace);
        }
    }
    result.final = evaluate_pointmaps(result.state.pointmaps, scene.gt_pointmaps);
    return result;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "step,L_anchor,L_ren,L_total,grad_norm\n";
    for (const auto& r : trace) {
        os << r.step << ',' << r.anchor << ',' << r.render << ',' << r.total << ',' << r.grad_norm << '\n';
    }
    return os.str();
}

DescentProbe probe_first_step_descent(const SyntheticScene& scene, const OptimizeConfig& cfg, int max_halvings) {
    const OptimizationState init = initial_state(scene);
    const ScalePair scales = anchor_scales(init.pointmaps, scene.anchors);
    const ObjectiveValue obj0 = evaluate_objective(scene, init, cfg, false, scales);
    DescentProbe probe;
    probe.before = obj0.total.value;
    double lr = cfg.adam.lr;
    for (int k = 0; k <= max_halvings; ++k, lr *= 0.5) {
        OptimizeConfig c = cfg;
        c.adam.lr = lr;
        OptimizationState state = init;
        adam_step(state, obj0, c);
        const double after = evaluate_objective(scene, state, c, false, scales).total.value;
        probe.lr = lr;
        probe.after = after;
        if (after < probe.before) {
            probe.decreased = true;
            break;
        }
    }
    return probe;
}

const AblationArm& AblationReport::arm(const std::string& name) const {
    for (const auto& a : arms) {
        if (a.name == name) {
            return a;
        }
    }
    throw Error(ErrorCode::InvalidConfig, "no ablation arm named " + name);
}

AblationReport run_ablation(const SceneSpec& spec, const std::vector<std::uint64_t>& seeds, const OptimizeConfig& base,
                            int threads) {
    if (seeds.empty()) {
        throw Error(ErrorCode::InvalidConfig, "ablation needs at least one seed");
    }
    std::vector<std::pair<std::string, OptimizeConfig>> arm_cfgs;
    OptimizeConfig full = base;
    full.frozen_shape = true;
    arm_cfgs.emplace_back("full", full);
    OptimizeConfig no_anchor = full;
    no_anchor.hybrid.w_anchor = 0.0;
    arm_cfgs.emplace_back("no_anchor", no_anchor);
    OptimizeConfig no_render = full;
    no_render.hybrid.w_render = 0.0;
    arm_cfgs.emplace_back("no_render", no_render);
    OptimizeConfig unfrozen = full;
    unfrozen.frozen_shape = false;
    arm_cfgs.emplace_back("unfrozen", unfrozen);

    std::vector<SyntheticScene> scenes;
    for (const auto seed : seeds) {
        scenes.push_back(synth_scene(spec, seed));
    }

    AblationReport report;
    report.seeds = seeds;
    for (const auto& [name, cfg] : arm_cfgs) {
        AblationArm arm;
        arm.name = name;
        arm.final_cd.assign(seeds.size(), 0.0);
        arm.initial_cd.assign(seeds.size(), 0.0);
        arm.first_rows.assign(seeds.size(), TraceRow{});
        arm.seconds.assign(seeds.size(), 0.0);
        report.arms.push_back(std::move(arm));
    }

    const std::size_t n_jobs = arm_cfgs.size() * seeds.size();
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n_jobs);
    const auto worker = [&] {
        for (std::size_t job = next++; job < n_jobs; job = next++) {
            const std::size_t a = job / seeds.size();
            const std::size_t s = job % seeds.size();
            try {
                const auto t0 = std::chrono::steady_clock::now();
                const OptimizeResult r = optimize(scenes[s], arm_cfgs[a].second);
                report.arms[a].seconds[s] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                report.arms[a].final_cd[s] = r.final.chamfer;
                report.arms[a].initial_cd[s] = r.initial.chamfer;
                report.arms[a].first_rows[s] = r.trace.front();
            } catch (...) {
                errors[job] = std::current_exception();
            }
        }
    };
    const int n_threads = std::clamp(threads, 1, static_cast<int>(n_jobs));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    for (auto& arm : report.arms) {
        arm.mean_cd = std::accumulate(arm.final_cd.begin(), arm.final_cd.end(), 0.0) /
                      static_cast<double>(arm.final_cd.size());
    }
    const auto& f = report.arm("full").final_cd;
    const auto& na = report.arm("no_anchor").final_cd;
    const auto& nr = report.arm("no_render").final_cd;
    const auto& uf = report.arm("unfrozen").final_cd;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        report.ordering_holds.push_back(f[s] <= nr[s] && nr[s] < na[s]);
        report.frozen_within_tolerance.push_back(f[s] <= 1.1 * uf[s]);
    }
    return report;
}

std::string ablation_report_json(const AblationReport& report) {
    nlohmann::ordered_json j;
    j["seeds"] = report.seeds;
    nlohmann::ordered_json arms = nlohmann::ordered_json::array();
    for (const auto& arm : report.arms) {
        nlohmann::ordered_json a;
        a["name"] = arm.name;
        a["mean_cd"] = arm.mean_cd;
        a["final_cd"] = arm.final_cd;
        a["initial_cd"] = arm.initial_cd;
        a["seconds"] = arm.seconds;
        arms.push_back(a);
    }
    j["arms"] = arms;
    j["ordering_holds"] = report.ordering_holds;
    j["frozen_within_tolerance"] = report.frozen_within_tolerance;
    return j.dump(2);
}

}  // namespace anchorsplat
