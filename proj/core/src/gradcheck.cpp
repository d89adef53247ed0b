// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/gradcheck.hpp"

#include <json.hpp>

#include "anchorsplat/error.hpp"
#include "anchorsplat/gsplat.hpp"
#include "anchorsplat/random.hpp"

namespace anchorsplat {

namespace {

constexpr std::uint64_t kProblemStream = 0x70726f626c656d21ULL;

struct AnchorProblem {
    PointmapSet pointmaps;
    std::vector<AnchorGrid> anchors;
};

AnchorProblem random_anchor_problem(std::uint64_t seed) {
    CounterRng rng(seed, kProblemStream);
    AnchorProblem p;
    p.pointmaps = PointmapSet::zeros(2, 5, 6);
    for (auto& view : p.pointmaps.views) {
        AnchorGrid grid;
        grid.width = 6;
        grid.height = 5;
        grid.points.assign(view.points.size(), Eigen::Vector3d::Zero());
        grid.mask.assign(view.points.size(), 0);
        for (std::size_t i = 0; i < view.points.size(); ++i) {
            view.points[i] = Eigen::Vector3d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(2.0, 4.0));
            view.conf_raw[i] = 0.5 * rng.normal();
            if (rng.bernoulli(0.5)) {
                grid.mask[i] = 1;
                grid.points[i] = view.points[i] + 0.3 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
            }
        }
        p.anchors.push_back(std::move(grid));
    }
    return p;
}

struct RenderProblem {
    Image rendered;
    Image target;
    RenderLossConfig cfg;
};

RenderProblem random_render_problem(std::uint64_t seed) {
    CounterRng rng(seed, kProblemStream + 1);
    RenderProblem p;
    p.rendered = Image(9, 8);
    p.target = Image(9, 8);
    for (auto& x : p.rendered.data) {
        x = rng.uniform01();
    }
    for (auto& x : p.target.data) {
        x = rng.uniform01();
    }
    p.cfg.w_perceptual = 0.2;
    return p;
}

struct RasterProblem {
    GaussianSet gaussians;
    CameraIntrinsics k;
    Pose pose;
    int height = 10;
    int width = 12;
    Image weights;
};

RasterProblem random_raster_problem(std::uint64_t seed) {
    CounterRng rng(seed, kProblemStream + 2);
    RasterProblem p;
    p.k.model = CameraModel::Pinhole;
    p.k.width = static_cast<std::uint64_t>(p.width);
    p.k.height = static_cast<std::uint64_t>(p.height);
    p.k.fx = 14.0;
    p.k.fy = 13.0;
    p.k.cx = 5.5;
    p.k.cy = 4.5;
    p.pose.translation = Eigen::Vector3d(0.05, -0.02, 0.1);
    for (int i = 0; i < 12; ++i) {
        p.gaussians.means.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-0.8, 0.8), rng.uniform(2.5, 4.0));
        p.gaussians.log_scale.push_back(std::log(rng.uniform(0.15, 0.35)));
        p.gaussians.opacity_logit.push_back(rng.uniform(-1.0, 1.5));
        p.gaussians.color.emplace_back(rng.uniform01(), rng.uniform01(), rng.uniform01());
        p.gaussians.source_pixel.push_back(static_cast<std::uint32_t>(i));
    }
    p.weights = Image(p.width, p.height);
    for (auto& w : p.weights.data) {
        w = rng.uniform(-1.0, 1.0);
    }
    return p;
}

double weighted_sum(const Image& image, const Image& weights) {
    double s = 0.0;
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        s += image.data[i] * weights.data[i];
    }
    return s;
}

GradCheckOptions fd_options(const GradCheckSuiteOptions& o, double h) {
    GradCheckOptions fd;
    fd.h = h;
    fd.probes = static_cast<std::size_t>(o.probes);
    fd.seed = o.seed;
    return fd;
}

nlohmann::ordered_json vec3_list(const std::vector<Eigen::Vector3d>& v) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& p : v) {
        out.push_back({p.x(), p.y(), p.z()});
    }
    return out;
}

}  // namespace

std::vector<GradCheckSuiteResult> run_gradcheck_suites(const GradCheckSuiteOptions& options) {
    if (options.probes < 1) {
        throw Error(ErrorCode::InvalidConfig, "probes must be >= 1");
    }
    std::vector<GradCheckSuiteResult> results;

    {
        const AnchorProblem p = random_anchor_problem(options.seed);
        const ScalePair scales = anchor_scales(p.pointmaps, p.anchors);
        const AnchorLossConfig cfg;
        const auto grads = anchor_loss(p.pointmaps, p.anchors, cfg, scales);
        auto analytic = pack_gradients(grads);
        if (options.corrupt_gradient) {
            for (auto& g : analytic) {
                g *= 1.01;
            }
        }
        const auto params = pack_pointmap_params(p.pointmaps);
        PointmapSet work = p.pointmaps;
        const ScalarFn f = [&](std::span<const double> x) {
            unpack_pointmap_params(x, work);
            return anchor_loss(work, p.anchors, cfg, scales).value;
        };
        results.push_back({"anchor", finite_diff_check(f, params, analytic, fd_options(options, options.h_anchor)),
                           options.tol_anchor});
    }

    {
        const RenderProblem p = random_render_problem(options.seed);
        const auto value = render_loss(p.rendered, p.target, p.cfg);
        Image work = p.rendered;
        const ScalarFn f = [&](std::span<const double> x) {
            std::copy(x.begin(), x.end(), work.data.begin());
            return render_loss(work, p.target, p.cfg).value;
        };
        results.push_back({"render",
                           finite_diff_check(f, p.rendered.data, value.grad.data, fd_options(options, options.h_render)),
                           options.tol_render});
    }

    {
        const RasterProblem p = random_raster_problem(options.seed);
        const RasterSettings settings = RasterSettings::exact(Eigen::Vector3d(0.1, 0.2, 0.3));
        const RenderResult rr = rasterize(p.gaussians, p.k, p.pose, p.height, p.width, settings);
        const GaussianGrads grads = rasterize_backward(rr.aux, p.gaussians, p.k, p.pose, p.weights);
        const std::size_t n = p.gaussians.size();

        const auto check = [&](const std::string& name, auto get, auto set, const std::vector<double>& analytic) {
            std::vector<double> params;
            for (std::size_t i = 0; i < n; ++i) {
                get(p.gaussians, i, params);
            }
            GaussianSet work = p.gaussians;
            const ScalarFn f = [&](std::span<const double> x) {
                set(work, x);
                return weighted_sum(rasterize(work, p.k, p.pose, p.height, p.width, settings).image, p.weights);
            };
            results.push_back(
                {name, finite_diff_check(f, params, analytic, fd_options(options, options.h_raster)), options.tol_raster});
        };

        std::vector<double> d_means;
        std::vector<double> d_colors;
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) {
                d_means.push_back(grads.d_means[i][c]);
                d_colors.push_back(grads.d_color[i][c]);
            }
        }
        check(
            "raster_means",
            [](const GaussianSet& g, std::size_t i, std::vector<double>& out) {
                out.insert(out.end(), g.means[i].data(), g.means[i].data() + 3);
            },
            [](GaussianSet& g, std::span<const double> x) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g.means[i] = Eigen::Vector3d(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
                }
            },
            d_means);
        check(
            "raster_colors",
            [](const GaussianSet& g, std::size_t i, std::vector<double>& out) {
                out.insert(out.end(), g.color[i].data(), g.color[i].data() + 3);
            },
            [](GaussianSet& g, std::span<const double> x) {
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g.color[i] = Eigen::Vector3d(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
                }
            },
            d_colors);
        check(
            "raster_opacities",
            [](const GaussianSet& g, std::size_t i, std::vector<double>& out) { out.push_back(g.opacity_logit[i]); },
            [](GaussianSet& g, std::span<const double> x) { std::copy(x.begin(), x.end(), g.opacity_logit.begin()); },
            grads.d_opacity_logit);
    }
    return results;
}

std::string gradcheck_report_json(const std::vector<GradCheckSuiteResult>& results) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        nlohmann::ordered_json e;
        e["suite"] = r.name;
        e["max_rel_error"] = r.report.max_rel_error;
        e["threshold"] = r.threshold;
        e["probes"] = r.report.probes;
        e["worst_index"] = r.report.worst_index;
        e["worst_analytic"] = r.report.worst_analytic;
        e["worst_numeric"] = r.report.worst_numeric;
        e["pass"] = r.pass();
        j.push_back(e);
    }
    return j.dump(2);
}

std::string gradcheck_dump_json(std::uint64_t seed) {
    const AnchorProblem a = random_anchor_problem(seed);
    const RenderProblem r = random_render_problem(seed);
    const auto anchor = anchor_loss(a.pointmaps, a.anchors);
    const auto render = render_loss(r.rendered, r.target, r.cfg);

    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["height"] = a.pointmaps.height;
    j["width"] = a.pointmaps.width;
    auto views = nlohmann::ordered_json::array();
    for (std::size_t v = 0; v < a.pointmaps.views.size(); ++v) {
        nlohmann::ordered_json e;
        e["points"] = vec3_list(a.pointmaps.views[v].points);
        e["conf_raw"] = a.pointmaps.views[v].conf_raw;
        e["anchor_points"] = vec3_list(a.anchors[v].points);
        e["anchor_mask"] = a.anchors[v].mask;
        e["d_points"] = vec3_list(anchor.d_points[v]);
        e["d_conf_raw"] = anchor.d_conf_raw[v];
        views.push_back(e);
    }
    j["anchor"] = {{"value", anchor.value}, {"views", views}};
    j["render"] = {{"width", r.rendered.width},
                   {"height", r.rendered.height},
                   {"w_perceptual", r.cfg.w_perceptual},
                   {"rendered", r.rendered.data},
                   {"target", r.target.data},
                   {"value", render.value},
                   {"grad", render.grad.data}};
    return j.dump(2);
}

}  // namespace anchorsplat
