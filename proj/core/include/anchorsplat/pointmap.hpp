// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace anchorsplat {

/// One view's dense prediction: points in the reference (first view) camera
/// frame, unconstrained confidence logits and a validity mask, all row-major.
struct PointmapView {
    std::vector<Eigen::Vector3d> points;
    std::vector<double> conf_raw;
    std::vector<std::uint8_t> valid;
};

struct PointmapSet {
    int height = 0;
    int width = 0;
    std::vector<PointmapView> views;

    std::size_t pixels() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    std::size_t size() const { return views.size(); }

    /// N views of H×W zero points, zero logits, all valid.
    static PointmapSet zeros(std::size_t n_views, int height, int width) {
        PointmapSet set;
        set.height = height;
        set.width = width;
        const std::size_t n = set.pixels();
        set.views.resize(n_views);
        for (auto& v : set.views) {
            v.points.assign(n, Eigen::Vector3d::Zero());
            v.conf_raw.assign(n, 0.0);
            v.valid.assign(n, 1);
        }
        return set;
    }

    bool same_shape(const PointmapSet& other) const {
        if (height != other.height || width != other.width || views.size() != other.views.size()) {
            return false;
        }
        for (std::size_t i = 0; i < views.size(); ++i) {
            if (views[i].points.size() != other.views[i].points.size() ||
                views[i].conf_raw.size() != other.views[i].conf_raw.size() ||
                views[i].valid.size() != other.views[i].valid.size()) {
                return false;
            }
        }
        return true;
    }
};

/// C = 1 + exp(raw) > 1.
inline double confidence(double conf_raw) { return 1.0 + std::exp(conf_raw); }

}  // namespace anchorsplat
