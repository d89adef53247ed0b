// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria (capped at 1).

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "anchorsplat/colmap_io.hpp"
#include "anchorsplat/gradcheck.hpp"
#include "anchorsplat/harness.hpp"
#include "anchorsplat/losses.hpp"
#include "anchorsplat/metrics.hpp"
#include "anchorsplat/trajectory.hpp"
#include "oracles.hpp"

using namespace anchorsplat;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// -- criteria ---------------------------------------------------------------------

void gradient_gates(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        GradCheckSuiteOptions opts;
        opts.seed = seed;
        for (const auto& r : run_gradcheck_suites(opts)) {
            o.require(r.pass(), r.name + " seed " + std::to_string(seed));
            if (seed == 0) {
                o.detail << ' ' << r.name << '=' << r.report.max_rel_error << "<" << r.threshold;
            }
        }
    }
    const double t = seconds_since(t0);
    o.detail << " seconds=" << t;
    o.require(t < 30.0, "runtime < 30 s");
}

GaussianSet random_gaussians(CounterRng& rng, std::size_t n) {
    GaussianSet g;
    for (std::size_t i = 0; i < n; ++i) {
        g.means.emplace_back(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(2.0, 6.0));
        g.log_scale.push_back(std::log(rng.uniform(0.03, 0.3)));
        g.opacity_logit.push_back(rng.uniform(-2.0, 3.0));
        g.color.emplace_back(rng.uniform01(), rng.uniform01(), rng.uniform01());
        g.source_pixel.push_back(static_cast<std::uint32_t>(i));
    }
    return g;
}

void rasterizer_oracle(Outcome& o) {
    double worst_color = 0.0;
    double worst_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CounterRng rng(seed, 0x72617374);
        const GaussianSet g = random_gaussians(rng, 50);
        const auto k = oracle::pinhole(32.0, 30.0, 15.5, 15.5, 32, 32);
        const Pose pose = oracle::near_identity_pose(rng, 0.1, 0.1);
        const Eigen::Vector3d bg(rng.uniform01(), rng.uniform01(), rng.uniform01());
        const auto rr = rasterize(g, k, pose, 32, 32, RasterSettings::exact(bg));
        const auto want = oracle::naive_render(g, k, pose, 32, 32, bg);
        for (std::size_t i = 0; i < want.data.size(); ++i) {
            worst_color = std::max(worst_color, std::abs(rr.image.data[i] - want.data[i]));
        }
        // Telescoping on the exact tape and on the default (culling) tape.
        const RenderResult fast = rasterize(g, k, pose, 32, 32);
        for (const RenderAux* a : {&rr.aux, &fast.aux}) {
            for (std::size_t p = 0; p < 32 * 32; ++p) {
                double sum = a->final_transmittance[p];
                for (const auto& c : a->pixel_contributions(p)) {
                    sum += c.transmittance * c.alpha;
                }
                worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
            }
        }
    }
    o.detail << " max_color_diff=" << worst_color << " max_telescoping_err=" << worst_sum;
    o.require(worst_color <= 1e-6, "naive compositor within 1e-6");
    o.require(worst_sum <= 1e-12, "telescoping within 1e-12");
}

struct AnchorProblem {
    PointmapSet pm;
    std::vector<AnchorGrid> anchors;
};

AnchorProblem anchor_problem(std::uint64_t seed) {
    CounterRng rng(seed, 0x616e63);
    AnchorProblem p;
    p.pm = PointmapSet::zeros(3, 8, 9);
    for (auto& view : p.pm.views) {
        AnchorGrid grid;
        grid.width = 9;
        grid.height = 8;
        grid.points.assign(view.points.size(), Eigen::Vector3d::Zero());
        grid.mask.assign(view.points.size(), 0);
        for (std::size_t i = 0; i < view.points.size(); ++i) {
            view.points[i] = Eigen::Vector3d(rng.normal(), rng.normal(), rng.uniform(1.0, 4.0));
            view.conf_raw[i] = rng.normal();
            if (rng.bernoulli(0.3)) {
                grid.mask[i] = 1;
                grid.points[i] = 3.0 * view.points[i] + 0.3 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
            }
        }
        p.anchors.push_back(grid);
    }
    return p;
}

void anchor_invariances(Outcome& o) {
    double worst_scale = 0.0;
    double worst_stationary = 0.0;
    double masked_grad = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        AnchorProblem p = anchor_problem(seed);
        const auto base = anchor_loss(p.pm, p.anchors);
        CounterRng rng(seed, 0x7363);
        const double s = std::exp(rng.uniform(-4.0, 4.0));
        const double t = std::exp(rng.uniform(-4.0, 4.0));
        AnchorProblem q = p;
        for (auto& v : q.pm.views) {
            for (auto& x : v.points) {
                x *= s;
            }
        }
        for (auto& g : q.anchors) {
            for (auto& x : g.points) {
                x *= t;
            }
        }
        const auto scaled = anchor_loss(q.pm, q.anchors);
        worst_scale = std::max(worst_scale, std::abs(scaled.value - base.value) / std::max(1.0, std::abs(base.value)));

        for (std::size_t v = 0; v < p.anchors.size(); ++v) {
            for (std::size_t i = 0; i < p.anchors[v].mask.size(); ++i) {
                if (!p.anchors[v].mask[i]) {
                    masked_grad = std::max({masked_grad, base.d_points[v][i].norm(), std::abs(base.d_conf_raw[v][i])});
                }
            }
        }

        // Confidence at its closed-form optimum C = alpha / l.
        const ScalePair sc = anchor_scales(p.pm, p.anchors);
        AnchorLossConfig cfg;
        cfg.alpha = 100.0;
        for (std::size_t v = 0; v < p.anchors.size(); ++v) {
            for (std::size_t i = 0; i < p.anchors[v].mask.size(); ++i) {
                if (p.anchors[v].mask[i]) {
                    const double l = regr_residual(p.pm.views[v].points[i], p.anchors[v].points[i], sc.pred, sc.anchor);
                    p.pm.views[v].conf_raw[i] = std::log(cfg.alpha / l - 1.0);
                }
            }
        }
        const auto at_opt = anchor_loss(p.pm, p.anchors, cfg, sc);
        for (std::size_t v = 0; v < p.anchors.size(); ++v) {
            for (std::size_t i = 0; i < p.anchors[v].mask.size(); ++i) {
                if (p.anchors[v].mask[i]) {
                    const double c = confidence(p.pm.views[v].conf_raw[i]);
                    // Relative to the scale of each term of the derivative.
                    worst_stationary = std::max(worst_stationary, std::abs(at_opt.d_conf_raw[v][i]) / (c * cfg.alpha));
                }
            }
        }
    }
    o.detail << " scale_rel_err=" << worst_scale << " stationarity=" << worst_stationary
             << " masked_grad=" << masked_grad;
    o.require(worst_scale <= 1e-12, "global scale invariance to 1e-12");
    o.require(worst_stationary <= 1e-12, "stationary confidence");
    o.require(masked_grad == 0.0, "zero gradient on masked pixels");
}

void sampling_statistics(Outcome& o) {
    VideoMeta video;
    video.video_id = "synthetic";
    video.frame_count = 100000;
    video.fps = 30.0;
    video.width = 640;
    video.height = 480;
    const std::int64_t eps = 5;
    std::vector<double> counts(2 * eps + 1, 0.0);
    double total = 0.0;
    bool bounded = true;
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        const auto t = sample_perturbed(video, 100, 20, 19, eps, seed);
        for (std::size_t i = 0; i < t.frame_indices.size(); ++i) {
            const std::int64_t off = t.frame_indices[i] - 100 - 20 * static_cast<std::int64_t>(i);
            bounded = bounded && std::abs(off) <= eps;
            if (std::abs(off) <= eps) {
                counts[static_cast<std::size_t>(off + eps)] += 1.0;
            }
            total += 1.0;
        }
    }
    const double p = 1.0 / static_cast<double>(counts.size());
    const double sd = std::sqrt(total * p * (1.0 - p));
    double worst_z = 0.0;
    for (double c : counts) {
        worst_z = std::max(worst_z, std::abs(c - total * p) / sd);
    }

    MixSpec mix;
    CounterRng rng(11, 0x6d6978);
    const int draws = 31000;
    double anchors = 0.0;
    for (int i = 0; i < draws; ++i) {
        anchors += mixer_next(mix, rng) == BatchSource::Anchor ? 1.0 : 0.0;
    }
    const double pa = mix.anchor_fraction();
    const double mix_z = std::abs(anchors - draws * pa) / std::sqrt(draws * pa * (1.0 - pa));

    int violations = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const auto traj = sample_perturbed(video, 10, 20, 9, eps, seed);
        violations += satisfies_interpolation_rule(split_context_target(traj, 8, 2, seed)) ? 0 : 1;
    }
    o.detail << " offsets_bounded=" << bounded << " offset_max_z=" << worst_z << " mixer_anchor=" << anchors
             << " mixer_z=" << mix_z << " rule_violations=" << violations << "/10000";
    o.require(bounded, "offsets within eps");
    o.require(worst_z < 5.0, "offset uniformity within 5 sigma");
    o.require(mix_z < 5.0, "mixer within 5 sigma");
    o.require(violations == 0, "interpolation rule");
}

void metrics_oracles(Outcome& o) {
    double chamfer_err = 0.0;
    bool dac_exact = true;
    double worst_rre = 0.0;
    int inlier_mismatch = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CounterRng rng(seed, 0x6d6574);
        const auto a = oracle::random_points(rng, 200);
        const auto b = oracle::random_points(rng, 200, 1.3);
        chamfer_err = std::max(chamfer_err, std::abs(chamfer(a, b) - oracle::brute_chamfer(a, b)));

        auto gt = PointmapSet::zeros(2, 6, 7);
        auto pred = gt;
        for (std::size_t v = 0; v < 2; ++v) {
            for (std::size_t i = 0; i < gt.views[v].points.size(); ++i) {
                gt.views[v].points[i] = Eigen::Vector3d(rng.normal(), rng.normal(), rng.uniform(2, 4));
                pred.views[v].points[i] = gt.views[v].points[i] + 0.15 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
            }
        }
        auto scaled = pred;
        const double s = std::exp(rng.uniform(-3, 3));
        for (auto& v : scaled.views) {
            for (auto& x : v.points) {
                x *= s;
            }
        }
        for (double tau : {0.05, 0.1, 0.2}) {
            dac_exact = dac_exact && dac(pred, gt, tau) == dac(scaled, gt, tau);
        }

        // PnP: noiseless recovery, then exact inlier identification at 30% outliers.
        const auto k = oracle::pinhole(500, 500, 319.5, 239.5, 640, 480);
        const Pose pose = oracle::random_pose(rng, 1.0);
        std::vector<Correspondence2D3D> clean;
        std::vector<Correspondence2D3D> dirty;
        std::vector<std::uint8_t> truth;
        for (int i = 0; i < 100; ++i) {
            const double u = rng.uniform(0, 639);
            const double v = rng.uniform(0, 479);
            const Eigen::Vector3d w = pose.inverse().apply(unproject(k, u, v, rng.uniform(2, 8)));
            clean.push_back({{u, v}, w});
            if (i % 10 < 3) {
                Eigen::Vector2d bad(rng.uniform(0, 639), rng.uniform(0, 479));
                if ((bad - Eigen::Vector2d(u, v)).norm() < 20.0) {
                    bad.x() = std::fmod(bad.x() + 320.0, 640.0);
                }
                dirty.push_back({bad, w});
                truth.push_back(0);
            } else {
                dirty.push_back({{u, v}, w});
                truth.push_back(1);
            }
        }
        RansacOptions ro;
        ro.seed = seed;
        const auto exact = estimate_pose_pnp_ransac(clean, k, ro);
        worst_rre = std::max(worst_rre, rotation_angle_deg(exact.pose.rotation, pose.rotation));
        const auto robust = estimate_pose_pnp_ransac(dirty, k, ro);
        worst_rre = std::max(worst_rre, rotation_angle_deg(robust.pose.rotation, pose.rotation));
        inlier_mismatch += robust.inliers == truth ? 0 : 1;
    }
    o.detail << " chamfer_err=" << chamfer_err << " dac_scale_exact=" << dac_exact << " max_rre_deg=" << worst_rre
             << " inlier_mismatch_seeds=" << inlier_mismatch;
    o.require(chamfer_err <= 1e-9, "chamfer within 1e-9");
    o.require(dac_exact, "DAc scale invariance");
    o.require(worst_rre < 1e-4, "RRE < 1e-4 deg");
    o.require(inlier_mismatch == 0, "exact inliers");
}

void colmap_round_trip(Outcome& o) {
    const auto dir = oracle::temp_dir("acceptance_colmap");
    const auto again = oracle::temp_dir("acceptance_colmap_again");
    int bin_fail = 0;
    int text_fail = 0;
    int byte_fail = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const SparseModel m = oracle::random_model(seed + 1000, 1 + static_cast<int>(seed % 3), 3 + static_cast<int>(seed % 7),
                                                   static_cast<int>(10 * (seed % 5)));
        save_model(m, dir, ModelFormat::Binary);
        const SparseModel b = load_model(dir, ModelFormat::Binary);
        bin_fail += b == m ? 0 : 1;
        save_model(b, again, ModelFormat::Binary);
        for (const char* f : {"cameras.bin", "images.bin", "points3D.bin"}) {
            byte_fail += oracle::read_bytes(dir / f) == oracle::read_bytes(again / f) ? 0 : 1;
        }
        byte_fail += oracle::read_bytes(dir / "images.bin") == oracle::images_bin(m) ? 0 : 1;
        save_model(m, dir, ModelFormat::Text);
        text_fail += load_model(dir, ModelFormat::Text) == m ? 0 : 1;
    }
    o.detail << " models=50 binary_mismatch=" << bin_fail << " text_mismatch=" << text_fail
             << " byte_mismatch=" << byte_fail;
    o.require(bin_fail == 0 && text_fail == 0, "load(save(m)) == m");
    o.require(byte_fail == 0, "byte-stable binary output");
}

// Recovery and ablation share one run of the four arms.
void recovery_and_ablation(Outcome& recovery, Outcome& ablation) {
    const SceneSpec spec;
    const OptimizeConfig cfg;
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const AblationReport r = run_ablation(spec, seeds, cfg, 1);
    const auto& full = r.arm("full");
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const double ratio = full.final_cd[s] / full.initial_cd[s];
        recovery.detail << " seed" << seeds[s] << ": cd " << full.initial_cd[s] << "->" << full.final_cd[s]
                        << " ratio=" << ratio << " seconds=" << full.seconds[s] << ";";
        recovery.require(ratio <= 0.2, "ratio <= 0.2 on seed " + std::to_string(seeds[s]));
        recovery.require(full.seconds[s] < 600.0, "runtime < 10 min on seed " + std::to_string(seeds[s]));
    }
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        ablation.detail << " seed" << seeds[s] << ":";
        for (const auto& arm : r.arms) {
            ablation.detail << ' ' << arm.name << '=' << arm.final_cd[s];
        }
        ablation.detail << ';';
        ablation.require(r.ordering_holds[s], "full <= no_render < no_anchor on seed " + std::to_string(seeds[s]));
        ablation.require(r.frozen_within_tolerance[s], "frozen within 10% on seed " + std::to_string(seeds[s]));
    }
}

}  // namespace

int main() {
    int failed = 0;
    const auto report = [&](const std::string& name, const Outcome& o) {
        std::printf("%s %s:%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    };
    const auto run = [&](const std::string& name, const std::function<void(Outcome&)>& fn) {
        Outcome o;
        try {
            fn(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        report(name, o);
    };
    run("gradient_gates", gradient_gates);
    run("rasterizer_oracle", rasterizer_oracle);
    run("anchor_invariances", anchor_invariances);
    run("sampling_mixing_statistics", sampling_statistics);
    run("metrics_oracles", metrics_oracles);
    run("colmap_round_trip", colmap_round_trip);
    Outcome recovery;
    Outcome ablation;
    try {
        recovery_and_ablation(recovery, ablation);
    } catch (const std::exception& e) {
        recovery.require(false, std::string("exception: ") + e.what());
        ablation.require(false, std::string("exception: ") + e.what());
    }
    report("synthetic_recovery", recovery);
    report("ablation_ordering", ablation);
    std::printf("%d of 8 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
