#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"

#include "hairstep/render.hpp"

using namespace hairstep;
using hairstep::testing::TempDir;

namespace {

/// Camera at the origin looking down +z with identity extrinsics.
Camera axis_camera(int w = 64, int h = 64, double f = 50.0) {
    Camera c;
    c.fx = c.fy = f;
    c.cx = (w - 1) / 2.0;
    c.cy = (h - 1) / 2.0;
    c.width = w;
    c.height = h;
    return c;
}

HairModel vertical_strand(float x, float z, float y0 = -0.3f, float y1 = 0.3f) {
    HairModel m;
    m.strands.push_back({{Vec3f(x, y0, z), Vec3f(x, y1, z)}});
    return m;
}

}  // namespace

TEST(Camera, LookAtFrame) {
    const auto cam = Camera::look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3::UnitY(), 40.0, 100, 80);
    EXPECT_NO_THROW(validate(cam));
    const Vec3 c = cam.to_camera(Vec3::Zero());
    EXPECT_NEAR(c.z(), 3.0, 1e-12);
    // World +y appears upward (smaller image y); world +x to the right... as
    // seen from +z looking back, world +x is image right.
    EXPECT_LT(cam.project(cam.to_camera(Vec3(0, 0.5, 0))).y(), cam.cy);
    EXPECT_GT(cam.project(cam.to_camera(Vec3(-0.5, 0, 0))).x(), cam.cx - 1e9);
    EXPECT_NEAR(cam.project(c).x(), cam.cx, 1e-9);
}

TEST(Camera, OrbitDistance) {
    const auto cam = Camera::orbit(Vec3(0, 1, 0), 2.5, 30.0, 20.0, 35.0, 64, 64);
    const Eigen::Matrix3d R = cam.extrinsics.topLeftCorner<3, 3>();
    const Vec3 eye = -R.transpose() * cam.extrinsics.topRightCorner<3, 1>();
    EXPECT_NEAR((eye - Vec3(0, 1, 0)).norm(), 2.5, 1e-12);
}

TEST(Camera, ValidateRejectsBadRotation) {
    auto cam = axis_camera();
    cam.extrinsics(0, 0) = 2.0;
    EXPECT_THROW(validate(cam), InvalidInput);
    auto cam2 = axis_camera();
    cam2.fx = 0;
    EXPECT_THROW(validate(cam2), InvalidInput);
}

TEST(Camera, FileRoundTrip) {
    TempDir dir;
    const auto cam = Camera::orbit(Vec3::Zero(), 3, 10, 5, 30, 32, 24);
    write_camera(dir / "c.json", cam);
    const auto back = read_camera(dir / "c.json");
    EXPECT_EQ(back.width, 32);
    EXPECT_NEAR((back.extrinsics - cam.extrinsics).norm(), 0.0, 1e-12);
    EXPECT_THROW(read_camera(dir / "missing.json"), IoError);
}

TEST(Render, VerticalStrandIsDownwardColumn) {
    // Root at world y = -0.3 is the top of the image (camera y axis is down).
    const auto cam = axis_camera();
    const auto out = render_hair(vertical_strand(0.0f, 2.0f), cam);
    const int col = 31;  // cx = 31.5; pixel columns 31 and 32 are within 0.5
    int covered = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (!out.mask(x, y)) continue;
            ++covered;
            EXPECT_TRUE(x == col || x == col + 1);
            EXPECT_EQ(out.strandMap(x, y), (Rgb{1.0, 0.5, 1.0}));
        }
    EXPECT_GT(covered, 0);
    EXPECT_FALSE(out.empty);
}

TEST(Render, ConstantDistanceForFrontoParallelOffset) {
    // Strand at x = 0, z = 2 seen along its closest point: distance equals
    // hypot of the offsets of the point nearest the camera center.
    const auto cam = axis_camera(65, 65);
    const auto out = render_hair(vertical_strand(0.0f, 2.0f), cam);
    const int c = 32;
    ASSERT_TRUE(out.mask(c, c));
    EXPECT_NEAR(out.rawDistance(c, c), 2.0, 1e-6);
}

TEST(Render, NearerStrandWins) {
    const auto cam = axis_camera();
    HairModel m;
    m.strands.push_back({{Vec3f(0, -0.3f, 2.0f), Vec3f(0, 0.3f, 2.0f)}});
    m.strands.push_back({{Vec3f(-0.3f, 0, 1.0f), Vec3f(0.3f, 0, 1.0f)}});
    const auto out = render_hair(m, cam);
    const int x = 31, y = 31;
    ASSERT_TRUE(out.mask(x, y));
    EXPECT_EQ(out.strandIndex(x, y), 1);
    EXPECT_NEAR(out.rawDistance(x, y), std::hypot(1.0, 0.5 / 50.0), 1e-3);
    EXPECT_EQ(out.strandMap(x, y), (Rgb{1.0, 1.0, 0.5}));
    EXPECT_NEAR(out.depth.values(x, y), 1.0, 1e-12);
}

TEST(Render, BehindCameraIsEmpty) {
    const auto out = render_hair(vertical_strand(0.0f, -2.0f), axis_camera());
    EXPECT_TRUE(out.empty);
    EXPECT_EQ(count_set(out.mask), 0u);
}

TEST(Render, DegenerateProjectionCounted) {
    HairModel m;
    m.strands.push_back({{Vec3f(0, 0, 1), Vec3f(0, 0, 2)}});
    const auto out = render_hair(m, axis_camera());
    EXPECT_EQ(out.degenerateSegments, 1u);
}

TEST(Render, OccluderRemovesPixels) {
    const auto cam = axis_camera();
    Mask occ(64, 64, 0);
    for (int x = 0; x < 64; ++x) occ(x, 31) = 1;
    RenderParams p;
    p.occluder = &occ;
    const auto out = render_hair(vertical_strand(0.0f, 2.0f), cam, p);
    for (int x = 0; x < 64; ++x) EXPECT_EQ(out.mask(x, 31), 0);
    EXPECT_GT(count_set(out.mask), 0u);
}

TEST(Render, DepthNormalization) {
    const auto wig = hairstep::testing::test_wig(2, 300);
    const auto out = render_hair(wig, hairstep::testing::front_camera(64));
    ASSERT_FALSE(out.empty);
    double lo = 2, hi = -1;
    for (std::size_t i = 0; i < out.mask.size(); ++i) {
        if (!out.mask.at_index(i)) {
            EXPECT_EQ(out.depth.values.at_index(i), 0.0);
            continue;
        }
        const double v = out.depth.values.at_index(i);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        EXPECT_NEAR(v, (out.depth.dFar - out.rawDistance.at_index(i)) / (out.depth.dFar - out.depth.dNear), 1e-12);
    }
    EXPECT_EQ(lo, 0.0);
    EXPECT_EQ(hi, 1.0);
    EXPECT_EQ(out.depth.valid, out.mask);
}

TEST(Render, MatchesSplatOracle) {
    const auto wig = hairstep::testing::test_wig(17, 200);
    const auto cam = hairstep::testing::front_camera(64);
    const auto out = render_hair(wig, cam);
    const auto ref = oracle::splat_render(wig, cam, 1.0);
    std::size_t mismatch = 0;
    for (std::size_t i = 0; i < out.mask.size(); ++i) {
        mismatch += out.strandIndex.at_index(i) != ref.strand.at_index(i);
        if (out.mask.at_index(i)) { EXPECT_LE(out.rawDistance.at_index(i), ref.distance.at_index(i) + 1e-9); }
    }
    EXPECT_EQ(mismatch, 0u);
}

TEST(Render, PermutationInvariant) {
    auto wig = hairstep::testing::test_wig(4, 400);
    const auto cam = hairstep::testing::front_camera(96);
    const auto a = render_hair(wig, cam);
    Rng rng(1);
    for (std::size_t i = wig.strands.size() - 1; i > 0; --i) std::swap(wig.strands[i], wig.strands[rng.index(i + 1)]);
    const auto b = render_hair(wig, cam);
    EXPECT_EQ(a.strandMap, b.strandMap);
    EXPECT_EQ(a.depth.values, b.depth.values);
    EXPECT_EQ(a.mask, b.mask);
}

TEST(Render, WiderLinesCoverMore) {
    const auto wig = hairstep::testing::test_wig(3, 100);
    const auto cam = hairstep::testing::front_camera(64);
    RenderParams thin, thick;
    thick.lineWidth = 3.0;
    const auto a = render_hair(wig, cam, thin), b = render_hair(wig, cam, thick);
    EXPECT_GT(count_set(b.mask), count_set(a.mask));
    for (std::size_t i = 0; i < a.mask.size(); ++i)
        if (a.mask.at_index(i)) { EXPECT_TRUE(b.mask.at_index(i)); }
}

TEST(Iou, TrivialCases) {
    Mask a(10, 10, 0), b(10, 10, 0);
    EXPECT_EQ(compute_iou(a, b), 1.0);
    for (int i = 0; i < 50; ++i) a.at_index(static_cast<std::size_t>(i)) = 1;
    EXPECT_EQ(compute_iou(a, a), 1.0);
    for (int i = 50; i < 100; ++i) b.at_index(static_cast<std::size_t>(i)) = 1;
    EXPECT_EQ(compute_iou(a, b), 0.0);
    Mask c(10, 10, 1);
    EXPECT_EQ(compute_iou(a, c), 0.5);
    EXPECT_THROW(compute_iou(a, Mask(5, 5, 0)), InvalidInput);
}
