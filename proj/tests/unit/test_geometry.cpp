// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <map>
#include <numbers>

#include "anchorsplat/error.hpp"
#include "anchorsplat/geometry.hpp"
#include "oracles.hpp"

using namespace anchorsplat;

TEST_CASE("projection matches the homogeneous camera matrix") {
    CounterRng rng(1);
    const auto k = oracle::pinhole(520.0, 480.0, 319.5, 239.5, 640, 480);
    for (int trial = 0; trial < 200; ++trial) {
        const Pose pose = oracle::random_pose(rng);
        const Eigen::Vector3d p(rng.normal(), rng.normal(), rng.normal());
        const auto got = project_point(k, pose, p);
        const Eigen::Vector3d want = oracle::homogeneous_project(k, pose, p);
        if (want.z() <= 0) {
            CHECK_FALSE(got.has_value());
            continue;
        }
        REQUIRE(got.has_value());
        CHECK(got->u == doctest::Approx(want.x()).epsilon(1e-12));
        CHECK(got->v == doctest::Approx(want.y()).epsilon(1e-12));
        CHECK(got->depth == doctest::Approx(want.z()).epsilon(1e-12));
    }
}

TEST_CASE("unproject inverts projection") {
    CounterRng rng(2);
    const auto k = oracle::pinhole(300.0, 310.0, 100.0, 80.0, 200, 160);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Vector3d c(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.5, 5));
        const auto proj = project_point(k, Pose::identity(), c);
        REQUIRE(proj.has_value());
        CHECK((unproject(k, proj->u, proj->v, proj->depth) - c).norm() < 1e-12);
    }
}

TEST_CASE("pose algebra agrees with 4x4 matrices") {
    CounterRng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Pose a = oracle::random_pose(rng, 2.0);
        const Pose b = oracle::random_pose(rng, 2.0);
        CHECK((a.compose(b).matrix() - a.matrix() * b.matrix()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((a.inverse().matrix() - a.matrix().inverse()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((a.center() - a.inverse().translation).norm() < 1e-12);
        CHECK(is_valid_rotation(a.rotation));
    }
    Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
    bad(0, 0) = -1.0;
    CHECK_FALSE(is_valid_rotation(bad));
}

TEST_CASE("qvec follows the COLMAP (w, x, y, z) convention") {
    const double theta = 0.7;
    const Pose p = Pose::from_qvec({std::cos(theta / 2), 0.0, 0.0, std::sin(theta / 2)}, Eigen::Vector3d(1, 2, 3));
    Eigen::Matrix3d rz;
    rz << std::cos(theta), -std::sin(theta), 0, std::sin(theta), std::cos(theta), 0, 0, 0, 1;
    CHECK((p.rotation - rz).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(p.translation == Eigen::Vector3d(1, 2, 3));
}

namespace {

struct DepthFixture {
    SparseModel model;
    std::uint32_t image_id = 5;
};

// One camera, one image, points placed at known pixels including a collision,
// one behind the camera and one outside the frame.
DepthFixture depth_fixture() {
    DepthFixture f;
    const auto k = oracle::pinhole(100.0, 100.0, 31.5, 23.5, 64, 48);
    f.model.cameras[1] = k;
    ImageRecord im;
    im.image_id = f.image_id;
    im.camera_id = 1;
    const Eigen::Quaterniond q(Eigen::AngleAxisd(0.1, Eigen::Vector3d(0.3, -1.0, 0.2).normalized()));
    im.qvec = {q.w(), q.x(), q.y(), q.z()};
    im.translation = Eigen::Vector3d(0.1, -0.2, 0.3);
    im.name = "a.png";
    ImageRecord other = im;
    other.image_id = 6;
    other.name = "b.png";
    const Pose pose = Pose::from_image(im);
    const Pose inv = pose.inverse();

    const auto add = [&](std::uint64_t id, const Eigen::Vector3d& world, bool observed, double err) {
        SparsePoint sp;
        sp.point3d_id = id;
        sp.position = world;
        sp.reproj_error = err;
        if (observed) {
            sp.track.push_back({im.image_id, static_cast<std::uint32_t>(im.observations.size())});
            im.observations.push_back({0.0, 0.0, id});
        }
        sp.track.push_back({other.image_id, static_cast<std::uint32_t>(other.observations.size())});
        other.observations.push_back({0.0, 0.0, id});
        if (!observed) {
            sp.track.push_back({other.image_id, static_cast<std::uint32_t>(other.observations.size())});
            other.observations.push_back({1.0, 1.0, id});
        }
        f.model.points[id] = sp;
    };
    const auto at_pixel = [&](double u, double v, double d) { return inv.apply(unproject(k, u, v, d)); };
    add(1, at_pixel(10.2, 12.4, 2.0), true, 0.5);
    add(2, at_pixel(9.8, 11.6, 1.5), true, 0.5);   // same pixel (10, 12), nearer
    add(3, at_pixel(9.9, 12.3, 3.0), true, 0.5);   // same pixel, farther
    add(4, at_pixel(40.0, 30.0, 4.0), true, 2.5);  // large reprojection error
    add(5, inv.apply(Eigen::Vector3d(0.0, 0.0, -1.0)), true, 0.1);  // behind
    add(6, at_pixel(70.0, 10.0, 2.0), true, 0.1);  // outside the frame
    add(7, at_pixel(63.4, 47.4, 2.0), true, 0.1);  // rounds onto the last pixel
    add(8, at_pixel(20.0, 20.0, 2.5), false, 0.1); // not observed by this image
    f.model.images[im.image_id] = im;
    f.model.images[other.image_id] = other;
    return f;
}

// Independent expectation: project with the homogeneous matrix, round, keep nearest.
std::vector<DepthEntry> expected_depth(const SparseModel& m, std::uint32_t image_id, bool all, std::optional<double> max_err) {
    const auto& im = m.images.at(image_id);
    const auto& k = m.cameras.at(im.camera_id);
    const Pose pose = Pose::from_image(im);
    std::map<std::pair<int, int>, DepthEntry> best;
    for (const auto& [id, pt] : m.points) {
        bool observed = false;
        for (const auto& o : im.observations) {
            observed = observed || o.point3d_id == id;
        }
        if ((!all && !observed) || (max_err && pt.reproj_error > *max_err)) {
            continue;
        }
        const Eigen::Vector3d h = oracle::homogeneous_project(k, pose, pt.position);
        if (h.z() <= 0) {
            continue;
        }
        const int u = static_cast<int>(std::lround(h.x()));
        const int v = static_cast<int>(std::lround(h.y()));
        if (u < 0 || v < 0 || u >= static_cast<int>(k.width) || v >= static_cast<int>(k.height)) {
            continue;
        }
        const auto key = std::make_pair(v, u);
        if (!best.count(key) || h.z() < best[key].depth) {
            best[key] = DepthEntry{u, v, h.z(), id};
        }
    }
    std::vector<DepthEntry> out;
    for (const auto& [key, e] : best) {
        out.push_back(e);
    }
    return out;
}

void check_entries(const SparseDepthMap& got, const std::vector<DepthEntry>& want) {
    REQUIRE(got.entries.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(got.entries[i].u == want[i].u);
        CHECK(got.entries[i].v == want[i].v);
        CHECK(got.entries[i].point3d_id == want[i].point3d_id);
        CHECK(got.entries[i].depth == doctest::Approx(want[i].depth).epsilon(1e-12));
    }
}

}  // namespace

TEST_CASE("sparse depth keeps the nearest point per pixel") {
    const auto f = depth_fixture();
    validate_model(f.model);
    const auto d = render_sparse_depth(f.model, f.image_id);
    CHECK(d.width == 64);
    CHECK(d.height == 48);
    check_entries(d, expected_depth(f.model, f.image_id, false, std::nullopt));
    // Hand-checked: (10,12) from point 2, (40,30) from 4, (63,47) from 7.
    REQUIRE(d.entries.size() == 3);
    CHECK(d.entries[0].point3d_id == 2);
    CHECK(d.entries[0].depth == doctest::Approx(1.5));
}

TEST_CASE("sparse depth visibility and error filters") {
    const auto f = depth_fixture();
    SparseDepthOptions all;
    all.visibility = Visibility::AllInFront;
    check_entries(render_sparse_depth(f.model, f.image_id, all), expected_depth(f.model, f.image_id, true, std::nullopt));
    SparseDepthOptions strict;
    strict.max_reproj_error = 1.0;
    const auto d = render_sparse_depth(f.model, f.image_id, strict);
    check_entries(d, expected_depth(f.model, f.image_id, false, 1.0));
    CHECK(d.entries.size() == 2);
    CHECK_THROWS_AS(render_sparse_depth(f.model, 999), Error);
}

TEST_CASE("sparse depth is empty for a model without points") {
    SparseModel m;
    m.cameras[1] = oracle::pinhole(10, 10, 5, 5, 10, 10);
    ImageRecord im;
    im.image_id = 1;
    im.camera_id = 1;
    im.name = "x";
    m.images[1] = im;
    const auto d = render_sparse_depth(m, 1);
    CHECK(d.entries.empty());
}

TEST_CASE("anchor pointmaps reproject to their pixels") {
    const auto f = depth_fixture();
    const auto& im = f.model.images.at(f.image_id);
    const auto& k = f.model.cameras.at(im.camera_id);
    const Pose pose_v = Pose::from_image(im);
    CounterRng rng(4);
    const Pose pose_ref = oracle::random_pose(rng);
    SparseDepthOptions all;
    all.visibility = Visibility::AllInFront;
    const auto depth = render_sparse_depth(f.model, f.image_id, all);
    const auto grid = anchor_pointmap_from_depth(depth, k, pose_v, pose_ref);
    CHECK(grid.anchored_count() == depth.entries.size());
    for (const auto& e : depth.entries) {
        const std::size_t idx = static_cast<std::size_t>(e.v * grid.width + e.u);
        REQUIRE(grid.mask[idx] == 1);
        const Eigen::Vector3d world = pose_ref.inverse().apply(grid.points[idx]);
        const Eigen::Vector3d h = oracle::homogeneous_project(k, pose_v, world);
        CHECK(h.x() == doctest::Approx(e.u).epsilon(1e-9));
        CHECK(h.y() == doctest::Approx(e.v).epsilon(1e-9));
        CHECK(h.z() == doctest::Approx(e.depth).epsilon(1e-12));
    }
    // Reference = view itself: points are camera-frame unprojections.
    const auto self = anchor_pointmap_from_depth(depth, k, pose_v, pose_v);
    for (const auto& e : depth.entries) {
        const std::size_t idx = static_cast<std::size_t>(e.v * grid.width + e.u);
        CHECK((self.points[idx] - unproject(k, e.u, e.v, e.depth)).norm() < 1e-12);
    }
}

TEST_CASE("scale_norm") {
    const std::vector<Eigen::Vector3d> pts{{3, 4, 0}, {0, 0, 2}, {1, 0, 0}};
    CHECK(scale_norm(pts) == doctest::Approx(8.0 / 3.0));
    const std::vector<std::uint8_t> mask{1, 0, 1};
    CHECK(scale_norm(pts, mask) == doctest::Approx(3.0));
    const std::vector<std::uint8_t> none{0, 0, 0};
    CHECK_THROWS_AS(scale_norm(pts, none), Error);
    const std::vector<std::uint8_t> short_mask{1};
    CHECK_THROWS_AS(scale_norm(pts, short_mask), Error);
    const std::vector<Eigen::Vector3d> zeros(3, Eigen::Vector3d::Zero());
    CHECK_THROWS_AS(scale_norm(zeros), Error);
}
