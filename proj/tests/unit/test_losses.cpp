// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "anchorsplat/error.hpp"
#include "anchorsplat/losses.hpp"
#include "anchorsplat/random.hpp"
#include "oracles.hpp"

using namespace anchorsplat;

namespace {

struct Problem {
    PointmapSet pm;
    std::vector<AnchorGrid> anchors;
};

Problem random_problem(std::uint64_t seed, int n_views = 3, int h = 6, int w = 7, double p_anchor = 0.4) {
    CounterRng rng(seed);
    Problem p;
    p.pm = PointmapSet::zeros(static_cast<std::size_t>(n_views), h, w);
    for (auto& view : p.pm.views) {
        AnchorGrid g;
        g.width = w;
        g.height = h;
        g.points.assign(view.points.size(), Eigen::Vector3d::Zero());
        g.mask.assign(view.points.size(), 0);
        for (std::size_t i = 0; i < view.points.size(); ++i) {
            view.points[i] = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1, 3));
            view.conf_raw[i] = rng.normal();
            if (rng.bernoulli(p_anchor)) {
                g.mask[i] = 1;
                g.points[i] = 2.5 * view.points[i] + 0.2 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
            }
        }
        p.anchors.push_back(g);
    }
    return p;
}

// Direct evaluation of the objective from its definition.
double oracle_anchor_loss(const Problem& p, double alpha) {
    double zp = 0.0;
    double np = 0.0;
    double za = 0.0;
    double na = 0.0;
    for (std::size_t v = 0; v < p.pm.views.size(); ++v) {
        for (std::size_t i = 0; i < p.pm.views[v].points.size(); ++i) {
            if (p.pm.views[v].valid[i]) {
                zp += p.pm.views[v].points[i].norm();
                np += 1;
            }
            if (p.anchors[v].mask[i]) {
                za += p.anchors[v].points[i].norm();
                na += 1;
            }
        }
    }
    zp /= np;
    za /= na;
    double total = 0.0;
    for (std::size_t v = 0; v < p.pm.views.size(); ++v) {
        for (std::size_t i = 0; i < p.pm.views[v].points.size(); ++i) {
            if (!p.anchors[v].mask[i]) {
                continue;
            }
            const double c = 1.0 + std::exp(p.pm.views[v].conf_raw[i]);
            const double l = (p.pm.views[v].points[i] / zp - p.anchors[v].points[i] / za).norm();
            total += c * l - alpha * std::log(c);
        }
    }
    return total;
}

}  // namespace

TEST_CASE("anchor loss matches its definition") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = random_problem(seed);
        for (double alpha : {0.0, 0.2, 1.5}) {
            AnchorLossConfig cfg;
            cfg.alpha = alpha;
            CHECK(anchor_loss(p.pm, p.anchors, cfg).value == doctest::Approx(oracle_anchor_loss(p, alpha)).epsilon(1e-12));
        }
    }
}

TEST_CASE("anchor loss is invariant to independent global scales") {
    CounterRng rng(7);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto p = random_problem(seed);
        const double base = anchor_loss(p.pm, p.anchors).value;
        const double s = std::exp(rng.uniform(-3, 3));
        const double t = std::exp(rng.uniform(-3, 3));
        for (auto& v : p.pm.views) {
            for (auto& x : v.points) {
                x *= s;
            }
        }
        for (auto& g : p.anchors) {
            for (auto& x : g.points) {
                x *= t;
            }
        }
        const double scaled = anchor_loss(p.pm, p.anchors).value;
        CHECK(std::abs(scaled - base) <= 1e-12 * std::max(1.0, std::abs(base)));
    }
}

TEST_CASE("anchor gradient is zero on unanchored pixels and matches finite differences") {
    const auto p = random_problem(3);
    const auto scales = anchor_scales(p.pm, p.anchors);
    const auto g = anchor_loss(p.pm, p.anchors, {}, scales);
    for (std::size_t v = 0; v < p.anchors.size(); ++v) {
        for (std::size_t i = 0; i < p.anchors[v].mask.size(); ++i) {
            if (!p.anchors[v].mask[i]) {
                CHECK(g.d_points[v][i].norm() == 0.0);
                CHECK(g.d_conf_raw[v][i] == 0.0);
            }
        }
    }
    PointmapSet work = p.pm;
    const ScalarFn f = [&](std::span<const double> x) {
        unpack_pointmap_params(x, work);
        return anchor_loss(work, p.anchors, {}, scales).value;
    };
    GradCheckOptions o;
    o.probes = 500;
    const auto report = finite_diff_check(f, pack_pointmap_params(p.pm), pack_gradients(g), o);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("confidence is stationary at C = alpha / residual") {
    auto p = random_problem(4, 1, 3, 3, 1.0);
    const auto scales = anchor_scales(p.pm, p.anchors);
    const double alpha = 50.0;
    AnchorLossConfig cfg;
    cfg.alpha = alpha;
    for (std::size_t i = 0; i < p.pm.views[0].points.size(); ++i) {
        const double l = regr_residual(p.pm.views[0].points[i], p.anchors[0].points[i], scales.pred, scales.anchor);
        REQUIRE(alpha / l > 1.0);
        p.pm.views[0].conf_raw[i] = std::log(alpha / l - 1.0);
    }
    const auto g = anchor_loss(p.pm, p.anchors, cfg, scales);
    for (double d : g.d_conf_raw[0]) {
        CHECK(std::abs(d) < 1e-9);
    }
}

TEST_CASE("anchor loss errors") {
    auto p = random_problem(5);
    auto none = p.anchors;
    for (auto& g : none) {
        std::fill(g.mask.begin(), g.mask.end(), 0);
    }
    CHECK(oracle::code_of([&] { anchor_loss(p.pm, none); }) == ErrorCode::NoAnchors);
    auto fewer = p.anchors;
    fewer.pop_back();
    CHECK(oracle::code_of([&] { anchor_loss(p.pm, fewer); }) == ErrorCode::ShapeMismatch);
    auto narrow = p.anchors;
    narrow[0].width = 3;
    CHECK(oracle::code_of([&] { anchor_loss(p.pm, narrow); }) == ErrorCode::ShapeMismatch);
    auto zero = p.pm;
    for (auto& v : zero.views) {
        std::fill(v.points.begin(), v.points.end(), Eigen::Vector3d::Zero());
    }
    CHECK(oracle::code_of([&] { anchor_loss(zero, p.anchors); }) == ErrorCode::DegenerateScale);
    AnchorLossConfig skip;
    skip.skip_degenerate = true;
    const auto g = anchor_loss(zero, p.anchors, skip);
    CHECK(g.value == 0.0);
    CHECK(g.grad_norm() == 0.0);
}

TEST_CASE("views without anchors contribute nothing") {
    auto p = random_problem(6);
    std::fill(p.anchors[1].mask.begin(), p.anchors[1].mask.end(), 0);
    const auto g = anchor_loss(p.pm, p.anchors);
    for (std::size_t i = 0; i < g.d_points[1].size(); ++i) {
        CHECK(g.d_points[1][i].norm() == 0.0);
    }
    CHECK(g.value == doctest::Approx(oracle_anchor_loss(p, 0.2)).epsilon(1e-12));
}

TEST_CASE("hybrid loss is the weighted sum") {
    const auto p = random_problem(8);
    const auto a = anchor_loss(p.pm, p.anchors);
    auto r = LossValueAndGrads::zeros_like(p.pm);
    auto s = LossValueAndGrads::zeros_like(p.pm);
    CounterRng rng(9);
    r.value = 1.25;
    s.value = -0.5;
    for (std::size_t v = 0; v < r.d_points.size(); ++v) {
        for (std::size_t i = 0; i < r.d_points[v].size(); ++i) {
            r.d_points[v][i] = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
            s.d_points[v][i] = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
            r.d_conf_raw[v][i] = rng.normal();
        }
    }
    HybridLossConfig cfg{0.3, 2.0, 0.7};
    const auto h = hybrid_loss(a, r, s, cfg);
    CHECK(h.value == doctest::Approx(0.3 * a.value + 2.0 * 1.25 - 0.35));
    for (std::size_t v = 0; v < h.d_points.size(); ++v) {
        for (std::size_t i = 0; i < h.d_points[v].size(); ++i) {
            const Eigen::Vector3d want = 0.3 * a.d_points[v][i] + 2.0 * r.d_points[v][i] + 0.7 * s.d_points[v][i];
            CHECK((h.d_points[v][i] - want).norm() < 1e-12);
            CHECK(h.d_conf_raw[v][i] == doctest::Approx(0.3 * a.d_conf_raw[v][i] + 2.0 * r.d_conf_raw[v][i]));
        }
    }
    const auto no_sup = hybrid_loss(a, r, std::nullopt, cfg);
    CHECK(no_sup.value == doctest::Approx(0.3 * a.value + 2.5));
    const auto other = LossValueAndGrads::zeros_like(PointmapSet::zeros(2, 6, 7));
    CHECK(oracle::code_of([&] { hybrid_loss(a, other, std::nullopt, cfg); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("finite difference checker catches a wrong gradient") {
    const ScalarFn f = [](std::span<const double> x) { return x[0] * x[0] + 3.0 * x[1]; };
    const std::vector<double> x{1.5, -2.0};
    const std::vector<double> good{3.0, 3.0};
    const std::vector<double> bad{3.0, 3.03};
    CHECK(finite_diff_check(f, x, good).max_rel_error < 1e-8);
    const auto r = finite_diff_check(f, x, bad);
    CHECK(r.max_rel_error > 5e-3);
    CHECK(r.worst_index == 1);
    GradCheckOptions zero_h;
    zero_h.h = 0.0;
    CHECK(oracle::code_of([&] { finite_diff_check(f, x, good, zero_h); }) == ErrorCode::InvalidConfig);
    CHECK(relative_error(0.0, 0.0) == 0.0);
}

TEST_CASE("pack and unpack round trip") {
    const auto p = random_problem(10);
    auto params = pack_pointmap_params(p.pm);
    CHECK(params.size() == 3 * 6 * 7 * 4);
    PointmapSet work = PointmapSet::zeros(3, 6, 7);
    unpack_pointmap_params(params, work);
    CHECK(pack_pointmap_params(work) == params);
}
