// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anchorsplat/losses.hpp"

namespace anchorsplat {

struct GradCheckSuiteOptions {
    int probes = 64;
    std::uint64_t seed = 0;
    double h_anchor = 1e-5;
    double h_render = 1e-5;
    double h_raster = 1e-4;
    double tol_anchor = 1e-4;
    double tol_render = 1e-6;
    double tol_raster = 1e-3;
    // Test hook: scales the analytic anchor gradient by 1.01.
    bool corrupt_gradient = false;
};

struct GradCheckSuiteResult {
    std::string name;
    GradCheckReport report;
    double threshold = 0.0;

    bool pass() const { return report.max_rel_error < threshold; }
};

/// Finite-difference suites on seeded random problems: anchor loss, render
/// loss, and the rasterizer backward pass w.r.t. means, colors and opacities.
/// Throws InvalidConfig for probes < 1.
std::vector<GradCheckSuiteResult> run_gradcheck_suites(const GradCheckSuiteOptions& options);

std::string gradcheck_report_json(const std::vector<GradCheckSuiteResult>& results);

/// Inputs, loss values and gradients of one seeded anchor + render batch, as
/// JSON with shortest round-trip numbers.
std::string gradcheck_dump_json(std::uint64_t seed);

}  // namespace anchorsplat
