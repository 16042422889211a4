// Copyright Contributors to the gsav Project
// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <gsav/parallel.hpp>
#include <gsav/raymap.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace gsav {
namespace {

TEST(PixelRay, PrincipalPointIsOpticalAxis) {
    const Camera cam = testing::simple_camera(64, 48, 50);
    const Ray r = pixel_ray(cam, 31.5, 23.5);
    EXPECT_LT((r.direction - Vec3d(0, 0, 1)).norm(), 1e-15);
    EXPECT_LT(r.origin.norm(), 1e-15);
}

TEST(PixelRay, HandEvaluatedPinhole) {
    const Camera cam(CameraParams{512, 512, 256, 256, 512, 512, Mat4d::Identity()});
    const Ray r = pixel_ray(cam, 511.5, 255.5);
    EXPECT_LT((r.direction - Vec3d(0.5, 0, 1).normalized()).norm(), 1e-15);
}

TEST(PixelRay, TranslationEquivariance) {
    const Camera cam = look_at_camera(Vec3d(0.3, -0.2, -2), Vec3d::Zero(), Vec3d::UnitY(), 60, 60,
                                      32, 32, 64, 64);
    const Vec3d t(0.5, 1.0, -0.25);
    Mat4d m = cam.world_to_camera();
    m.topRightCorner<3, 1>() -= cam.rotation() * t; // center moves by +t
    const Camera moved = cam.with_pose(m);
    for (double i : {0.0, 17.25, 63.0}) {
        const Ray a = pixel_ray(cam, i, 5.0), b = pixel_ray(moved, i, 5.0);
        EXPECT_LT((b.origin - (a.origin + t)).norm(), 1e-12);
        EXPECT_LT((b.direction - a.direction).norm(), 1e-15);
    }
}

TEST(Plucker, HandExamples) {
    const auto zero = plucker_embed(Vec3d::Zero(), Vec3d(0.6, 0, 0.8));
    for (double v : zero) EXPECT_EQ(v, 0.0);
    const auto e = plucker_embed(Vec3d(1, 0, 0), Vec3d(0, 0, 1));
    const std::array<double, 6> want = {1, 0, 0, 0, -1, 0};
    EXPECT_EQ(e, want);
}

TEST(Plucker, MomentInvariantAlongRay) {
    Rng rng(2);
    for (int k = 0; k < 100; ++k) {
        const Vec3d o(rng.normal(), rng.normal(), rng.normal());
        const Vec3d d = Vec3d(rng.normal(), rng.normal(), rng.normal()).normalized();
        const double lambda = rng.uniform(-5, 5);
        const auto a = plucker_embed(o, d), b = plucker_embed(o + lambda * d, d);
        for (int c = 3; c < 6; ++c) EXPECT_NEAR(a[c], b[c], 1e-12);
    }
}

TEST(Sinusoidal, ZeroPeriodicAndLayout) {
    const auto z = sinusoidal_embed(Vec3d::Zero(), Vec3d::Zero(), 8);
    ASSERT_EQ(z.size(), 96u);
    for (std::size_t i = 0; i < z.size(); i += 2) {
        EXPECT_EQ(z[i], 0.0);
        EXPECT_EQ(z[i + 1], 1.0);
    }
    const Vec3d o(0.3, -1.2, 0.7), d = Vec3d(1, 2, 3).normalized();
    const auto a = sinusoidal_embed(o, d, 3);
    const auto b = sinusoidal_embed(o + Vec3d(2 * std::numbers::pi, 0, 0), d, 3);
    EXPECT_NEAR(a[0], b[0], 1e-12);
    EXPECT_NEAR(a[1], b[1], 1e-12);
    // index = (scalar * octaves + k) * 2 + {sin, cos}
    EXPECT_DOUBLE_EQ(a[(4 * 3 + 2) * 2 + 0], std::sin(4.0 * d.y()));
    EXPECT_DOUBLE_EQ(a[(4 * 3 + 2) * 2 + 1], std::cos(4.0 * d.y()));
    EXPECT_EQ(embedding_channels(EmbeddingKind::Sinusoidal, kDefaultOctaves), 96);
    EXPECT_EQ(embedding_channels(EmbeddingKind::Plucker, kDefaultOctaves), 6);
}

TEST(CropToGlobal, HandExamples) {
    const CropBox full{0, 0, 64, 48};
    EXPECT_EQ(crop_to_global(full, 13.5, 7.25, 64, 48), Vec2d(13.5, 7.25));
    const CropBox box{100, 200, 300, 400};
    EXPECT_EQ(crop_to_global(box, 256, 256, 512, 512), Vec2d(200, 300));
    EXPECT_EQ(crop_to_global(box, 0, 0, 512, 512), Vec2d(100, 200));
}

TEST(CropBox, RejectsZeroArea) {
    EXPECT_THROW((CropBox{1, 1, 1, 5}.validate()), ValidationError);
    EXPECT_THROW((CropBox{0, 5, 4, 2}.validate()), ValidationError);
    EXPECT_NO_THROW((CropBox{-50, -50, 500, 500}.validate()));
}

TEST(RayMap, FullFrameCropIsBitIdentical) {
    Rng rng(8);
    for (int k = 0; k < 5; ++k) {
        const Camera cam = testing::random_camera(rng, 40, 30);
        for (EmbeddingKind kind : {EmbeddingKind::Plucker, EmbeddingKind::Sinusoidal}) {
            const RayMap a = build_ray_map(cam, std::nullopt, 40, 30, kind);
            const RayMap b = build_ray_map(cam, CropBox::full_frame(cam), 40, 30, kind);
            EXPECT_EQ(a.values, b.values);
            EXPECT_EQ(a.channels, embedding_channels(kind, kDefaultOctaves));
        }
    }
}

TEST(RayMap, ResolutionInvariance) {
    const Camera cam = look_at_camera(Vec3d(1, 0.2, -1.5), Vec3d::Zero(), Vec3d::UnitY(), 40, 40,
                                      20, 20, 40, 40);
    const CropBox box{5.5, 3.0, 29.5, 27.0};
    const auto lo = ray_grid(cam, box, 16, 16);
    const auto hi = ray_grid(cam, box, 32, 32);
    // Pixel (2u, 2v) at 2x resolution sits at local coordinate 2u, which maps
    // to the same global point as u at 1x.
    for (int v = 0; v < 16; ++v)
        for (int u = 0; u < 16; ++u) {
            const Vec2d g = crop_to_global(box, u, v, 16, 16);
            const Ray want = pixel_ray(cam, g.x(), g.y());
            const Ray& a = lo[std::size_t(v) * 16 + u];
            const Ray& b = hi[std::size_t(2 * v) * 32 + 2 * u];
            EXPECT_LT((a.direction - want.direction).norm(), 1e-12);
            EXPECT_LT((b.direction - a.direction).norm(), 1e-12);
        }
}

TEST(RayMap, UnitDirectionsAndMomentInvariance) {
    Rng rng(9);
    const Camera cam = testing::random_camera(rng, 32, 32);
    const auto rays = ray_grid(cam, CropBox{-8, -4, 40, 44}, 32, 32);
    const RayMap map = build_ray_map(cam, CropBox{-8, -4, 40, 44}, 32, 32, EmbeddingKind::Plucker);
    for (std::size_t p = 0; p < rays.size(); ++p) {
        EXPECT_NEAR(rays[p].direction.norm(), 1.0, 1e-6);
        const auto moved = plucker_embed(rays[p].origin + 0.7 * rays[p].direction, rays[p].direction);
        for (int c = 3; c < 6; ++c) EXPECT_NEAR(map.values[p * 6 + c], moved[c], 1e-6);
    }
}

TEST(RayMap, DeterministicAcrossThreadCounts) {
    Rng rng(10);
    const Camera cam = testing::random_camera(rng, 64, 64);
    std::vector<float> first;
    for (int threads : {1, 2, 4}) {
        parallel::ScopedThreads scope(threads);
        const RayMap m = build_ray_map(cam, CropBox{3, 4, 50, 51}, 64, 64, EmbeddingKind::Sinusoidal);
        if (first.empty())
            first = m.values;
        else
            EXPECT_EQ(first, m.values);
    }
}

TEST(RayMap, NestedCropComposition) {
    Rng rng(12);
    const Camera cam = testing::random_camera(rng, 64, 64);
    const CropBox outer{10, 6, 42, 38};
    const CropBox inner{4, 8, 20, 24}; // in the frame of a 32x32 crop of outer
    const CropBox composed = compose_crops(outer, inner, 32, 32);
    const auto direct = ray_grid(cam, composed, 16, 16);
    for (int v = 0; v < 16; ++v)
        for (int u = 0; u < 16; ++u) {
            const Vec2d in_outer = crop_to_global(inner, u, v, 16, 16);
            const Vec2d g = crop_to_global(outer, in_outer.x(), in_outer.y(), 32, 32);
            const Ray two_step = pixel_ray(cam, g.x(), g.y());
            EXPECT_LT((two_step.direction - direct[std::size_t(v) * 16 + u].direction).norm(), 1e-12);
        }
}

} // namespace
} // namespace gsav
