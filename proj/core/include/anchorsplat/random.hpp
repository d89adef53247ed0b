// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace anchorsplat {

/// Counter-based generator: draw k of stream s under seed q is a pure function
/// mix(q, s, k). Outputs are identical on every platform and standard library,
/// which std::*_distribution does not guarantee.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ULL))) {}

    std::uint64_t counter() const noexcept { return counter_; }
    void seek(std::uint64_t counter) noexcept { counter_ = counter; }

    /// Raw 64-bit draw at an absolute counter position (does not advance).
    std::uint64_t at(std::uint64_t counter) const noexcept {
        return mix64(key_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
    }

    std::uint64_t next_u64() noexcept { return at(counter_++); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer uniform over [lo, hi] (inclusive) by rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) {  // full 64-bit range
            return static_cast<std::int64_t>(next_u64());
        }
        const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
        std::uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return lo + static_cast<std::int64_t>(x % span);
    }

    /// Standard normal via Box-Muller (one value per two draws).
    double normal() noexcept {
        double u1 = uniform01();
        while (u1 <= 0.0) {
            u1 = uniform01();
        }
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) noexcept { return uniform01() < p; }

    static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace anchorsplat
