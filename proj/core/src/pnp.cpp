// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "anchorsplat/error.hpp"
#include "anchorsplat/metrics.hpp"
#include "anchorsplat/random.hpp"

namespace anchorsplat {

namespace {

constexpr std::size_t kMinimalSample = 6;
constexpr std::uint64_t kRansacStream = 0x72616e7361632121ULL;

// Relative size of the smallest principal extent below which a point set is
// treated as planar (or worse) for the DLT.
constexpr double kPlanarityTol = 1e-6;

Eigen::Vector2d normalized_coords(const CameraIntrinsics& k, const Eigen::Vector2d& px) {
    return {(px.x() - k.cx) / k.fx, (px.y() - k.cy) / k.fy};
}

bool is_degenerate(std::span<const Correspondence2D3D> c) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& x : c) {
        mean += x.point;
    }
    mean /= static_cast<double>(c.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& x : c) {
        const Eigen::Vector3d d = x.point - mean;
        cov += d * d.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0);
    return !(ev[2] > 0.0) || std::sqrt(ev[0] / ev[2]) < kPlanarityTol;
}

double reprojection_error(const CameraIntrinsics& k, const Pose& pose, const Correspondence2D3D& c) {
    const auto proj = project_point(k, pose, c.point);
    if (!proj) {
        return std::numeric_limits<double>::infinity();
    }
    return std::hypot(proj->u - c.pixel.x(), proj->v - c.pixel.y());
}

struct Score {
    std::size_t inliers = 0;
    double mean_error = std::numeric_limits<double>::infinity();

    bool better_than(const Score& other) const {
        return inliers > other.inliers || (inliers == other.inliers && mean_error < other.mean_error);
    }
};

Score score_pose(std::span<const Correspondence2D3D> c, const CameraIntrinsics& k, const Pose& pose,
                 double threshold, std::vector<std::uint8_t>* mask) {
    Score s;
    double sum = 0.0;
    if (mask != nullptr) {
        mask->assign(c.size(), 0);
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double e = reprojection_error(k, pose, c[i]);
        if (e <= threshold) {
            ++s.inliers;
            sum += e;
            if (mask != nullptr) {
                (*mask)[i] = 1;
            }
        }
    }
    if (s.inliers > 0) {
        s.mean_error = sum / static_cast<double>(s.inliers);
    }
    return s;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
    const double theta = w.norm();
    if (theta < 1e-12) {
        Eigen::Matrix3d k;
        k << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
        return Eigen::Matrix3d::Identity() + k;
    }
    return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

}  // namespace

Pose solve_pnp_dlt(std::span<const Correspondence2D3D> c, const CameraIntrinsics& k) {
    if (c.size() < kMinimalSample) {
        throw Error(ErrorCode::InsufficientCorrespondences, "DLT needs at least 6 correspondences");
    }
    if (is_degenerate(c)) {
        throw Error(ErrorCode::DegenerateConfiguration, "3D points are coplanar or collinear");
    }
    // Condition the 3D points: centroid at origin, mean distance sqrt(3).
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& x : c) {
        centroid += x.point;
    }
    centroid /= static_cast<double>(c.size());
    double mean_dist = 0.0;
    for (const auto& x : c) {
        mean_dist += (x.point - centroid).norm();
    }
    mean_dist /= static_cast<double>(c.size());
    const double s = std::sqrt(3.0) / mean_dist;

    Eigen::MatrixXd a(2 * c.size(), 12);
    a.setZero();
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Eigen::Vector2d m = normalized_coords(k, c[i].pixel);
        Eigen::Vector4d xh;
        xh << s * (c[i].point - centroid), 1.0;
        const auto r0 = static_cast<Eigen::Index>(2 * i);
        a.block<1, 4>(r0, 0) = xh.transpose();
        a.block<1, 4>(r0, 8) = -m.x() * xh.transpose();
        a.block<1, 4>(r0 + 1, 4) = xh.transpose();
        a.block<1, 4>(r0 + 1, 8) = -m.y() * xh.transpose();
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd sv = svd.singularValues();
    if (!(sv[10] > 0.0) || sv[11] / sv[10] > 0.5) {
        throw Error(ErrorCode::DegenerateConfiguration, "DLT null space is not one-dimensional");
    }
    const Eigen::VectorXd p = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> proj;
    proj << p.segment<4>(0).transpose(), p.segment<4>(4).transpose(), p.segment<4>(8).transpose();

    // Undo conditioning: x_cond = s (x − c)  =>  P = P_cond · [sI, −s c; 0 1].
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topLeftCorner<3, 3>() *= s;
    t.topRightCorner<3, 1>() = -s * centroid;
    proj = proj * t;

    Eigen::Matrix3d m = proj.leftCols<3>();
    if (m.determinant() < 0.0) {
        proj = -proj;
        m = -m;
    }
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd_m(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double scale = svd_m.singularValues().mean();
    if (!(scale > 0.0)) {
        throw Error(ErrorCode::DegenerateConfiguration, "DLT produced a singular rotation block");
    }
    Pose pose;
    pose.rotation = svd_m.matrixU() * svd_m.matrixV().transpose();
    pose.translation = proj.col(3) / scale;
    return pose;
}

Pose refine_pose(std::span<const Correspondence2D3D> c, const CameraIntrinsics& k, const Pose& initial,
                 std::size_t iterations) {
    Pose pose = initial;
    double lambda = 1e-6;
    const auto cost = [&](const Pose& p) {
        double sum = 0.0;
        for (const auto& x : c) {
            const Eigen::Vector3d q = p.apply(x.point);
            if (!(q.z() > 0.0)) {
                return std::numeric_limits<double>::infinity();
            }
            const double du = k.fx * q.x() / q.z() + k.cx - x.pixel.x();
            const double dv = k.fy * q.y() / q.z() + k.cy - x.pixel.y();
            sum += du * du + dv * dv;
        }
        return sum;
    };
    double current = cost(pose);
    for (std::size_t it = 0; it < iterations; ++it) {
        Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
        for (const auto& x : c) {
            const Eigen::Vector3d q = pose.apply(x.point);
            const double iz = 1.0 / q.z();
            const Eigen::Vector2d r(k.fx * q.x() * iz + k.cx - x.pixel.x(), k.fy * q.y() * iz + k.cy - x.pixel.y());
            Eigen::Matrix<double, 2, 3> dproj;
            dproj << k.fx * iz, 0.0, -k.fx * q.x() * iz * iz, 0.0, k.fy * iz, -k.fy * q.y() * iz * iz;
            // Left perturbation: q' = exp(w) q + dt  =>  dq/dw = −[q]×, dq/dt = I.
            Eigen::Matrix<double, 3, 6> dq;
            dq.leftCols<3>() << 0.0, q.z(), -q.y(), -q.z(), 0.0, q.x(), q.y(), -q.x(), 0.0;
            dq.rightCols<3>() = Eigen::Matrix3d::Identity();
            const Eigen::Matrix<double, 2, 6> j = dproj * dq;
            jtj += j.transpose() * j;
            jtr += j.transpose() * r;
        }
        bool improved = false;
        for (int attempt = 0; attempt < 10 && !improved; ++attempt) {
            Eigen::Matrix<double, 6, 6> h = jtj;
            h.diagonal() *= (1.0 + lambda);
            const Eigen::Matrix<double, 6, 1> delta = h.ldlt().solve(-jtr);
            if (!delta.allFinite()) {
                break;
            }
            const Eigen::Matrix3d dr = so3_exp(delta.head<3>());
            Pose candidate{dr * pose.rotation, dr * pose.translation + delta.tail<3>()};
            const double next = cost(candidate);
            if (next <= current) {
                improved = next < current;
                pose = candidate;
                current = next;
                lambda = std::max(lambda * 0.1, 1e-12);
                if (!improved) {
                    break;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) {
            break;
        }
    }
    // Re-orthonormalize against accumulated rounding.
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(pose.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    pose.rotation = svd.matrixU() * svd.matrixV().transpose();
    return pose;
}

PnpResult estimate_pose_pnp_ransac(std::span<const Correspondence2D3D> c, const CameraIntrinsics& k,
                                   const RansacOptions& options) {
    if (c.size() < kMinimalSample) {
        throw Error(ErrorCode::InsufficientCorrespondences,
                    "PnP needs at least 6 correspondences, got " + std::to_string(c.size()));
    }
    CounterRng rng(options.seed, kRansacStream);
    std::vector<std::size_t> pool(c.size());
    std::vector<Correspondence2D3D> sample(kMinimalSample);

    bool found = false;
    Pose best_pose;
    Score best;
    for (std::size_t it = 0; it < options.iterations; ++it) {
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t s = 0; s < kMinimalSample; ++s) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(s), static_cast<std::int64_t>(pool.size() - 1)));
            std::swap(pool[s], pool[j]);
            sample[s] = c[pool[s]];
        }
        Pose hypothesis;
        try {
            hypothesis = solve_pnp_dlt(sample, k);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DegenerateConfiguration) {
                continue;
            }
            throw;
        }
        const Score score = score_pose(c, k, hypothesis, options.inlier_px_threshold, nullptr);
        if (!found || score.better_than(best)) {
            found = true;
            best = score;
            best_pose = hypothesis;
        }
    }
    if (!found) {
        throw Error(ErrorCode::DegenerateConfiguration, "every minimal sample was degenerate");
    }

    PnpResult result;
    result.pose = best_pose;
    std::vector<std::uint8_t> mask;
    Score score = score_pose(c, k, best_pose, options.inlier_px_threshold, &mask);
    // Refine on the consensus set, then re-score; repeat while the set grows.
    for (int round = 0; round < 3 && score.inliers >= kMinimalSample; ++round) {
        std::vector<Correspondence2D3D> inliers;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (mask[i] != 0) {
                inliers.push_back(c[i]);
            }
        }
        const Pose refined = refine_pose(inliers, k, result.pose, options.refine_iterations);
        std::vector<std::uint8_t> refined_mask;
        const Score refined_score = score_pose(c, k, refined, options.inlier_px_threshold, &refined_mask);
        if (refined_score.inliers < score.inliers) {
            break;
        }
        const bool same_set = refined_mask == mask;
        result.pose = refined;
        mask = std::move(refined_mask);
        score = refined_score;
        if (same_set) {
            break;
        }
    }
    result.inliers = std::move(mask);
    result.inlier_count = score.inliers;
    result.mean_inlier_error_px = score.mean_error;
    return result;
}

}  // namespace anchorsplat
