// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "anchorsplat/gsplat.hpp"
#include "anchorsplat/harness.hpp"
#include "anchorsplat/losses.hpp"
#include "anchorsplat/metrics.hpp"
#include "oracles.hpp"

using namespace anchorsplat;

namespace {

struct RasterFixture {
    GaussianSet g;
    CameraIntrinsics k;
    Pose pose;
    int size = 0;

    explicit RasterFixture(int side) : size(side) {
        CounterRng rng(1);
        k = oracle::pinhole(side, side, (side - 1) / 2.0, (side - 1) / 2.0, static_cast<std::uint64_t>(side),
                            static_cast<std::uint64_t>(side));
        const std::size_t n = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
        for (std::size_t i = 0; i < n; ++i) {
            g.means.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(2.5, 3.5));
            g.log_scale.push_back(std::log(1.5 * 3.0 / side));
            g.opacity_logit.push_back(logit(0.95));
            g.color.emplace_back(rng.uniform01(), rng.uniform01(), rng.uniform01());
            g.source_pixel.push_back(static_cast<std::uint32_t>(i));
        }
    }
};

void BM_RasterizeForward(benchmark::State& state) {
    const RasterFixture f(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(rasterize(f.g, f.k, f.pose, f.size, f.size));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.g.size()));
}
BENCHMARK(BM_RasterizeForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_RasterizeBackward(benchmark::State& state) {
    const RasterFixture f(static_cast<int>(state.range(0)));
    const auto rr = rasterize(f.g, f.k, f.pose, f.size, f.size);
    const Image grad(f.size, f.size, 1e-3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rasterize_backward(rr.aux, f.g, f.k, f.pose, grad));
    }
}
BENCHMARK(BM_RasterizeBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ChamferKdTree(benchmark::State& state) {
    CounterRng rng(2);
    const auto a = oracle::random_points(rng, static_cast<std::size_t>(state.range(0)));
    const auto b = oracle::random_points(rng, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(chamfer(a, b));
    }
}
BENCHMARK(BM_ChamferKdTree)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ChamferBruteForce(benchmark::State& state) {
    CounterRng rng(2);
    const auto a = oracle::random_points(rng, static_cast<std::size_t>(state.range(0)));
    const auto b = oracle::random_points(rng, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(oracle::brute_chamfer(a, b));
    }
}
BENCHMARK(BM_ChamferBruteForce)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_AnchorLoss(benchmark::State& state) {
    SceneSpec spec;
    spec.height = static_cast<int>(state.range(0));
    spec.width = spec.height;
    const auto scene = synth_scene(spec, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(anchor_loss(scene.init_pointmaps, scene.anchors));
    }
}
BENCHMARK(BM_AnchorLoss)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_OptimizeStep(benchmark::State& state) {
    SceneSpec spec;
    const auto scene = synth_scene(spec, 1);
    OptimizeConfig cfg;
    auto st = initial_state(scene);
    for (auto _ : state) {
        const auto obj = evaluate_objective(scene, st, cfg);
        adam_step(st, obj, cfg);
    }
}
BENCHMARK(BM_OptimizeStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
