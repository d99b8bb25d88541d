// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/renderer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace steepgs;

namespace {

Scene
random_scene(std::mt19937_64 &rng, int n, const Camera &cam) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scene s;
    for (int i = 0; i < n; ++i) {
        Gaussian g;
        g.id = i;
        g.position = Vec3(u(rng) * cam.width * cam.pixelScale, u(rng) * cam.height * cam.pixelScale, 0.0);
        g.scale = Vec3(0.1 + 0.3 * u(rng), 0.1 + 0.3 * u(rng), 1.0);
        g.rotation = planar_rotation(3.0 * u(rng));
        g.opacity = 0.2 + 0.7 * u(rng);
        g.color = Vec3(u(rng), u(rng), u(rng));
        g.depth = u(rng);
        s.primitives.push_back(g);
    }
    return s;
}

Image
random_image(std::mt19937_64 &rng, int w, int h) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(w, h);
    for (Eigen::Index i = 0; i < img.pixels.size(); ++i)
        img.pixels.data()[i] = u(rng);
    return img;
}

} // namespace

TEST(Render, SinglePrimitiveAtCenterGivesColor) {
    const Camera cam = Camera::planar(4, 4, 1.0);
    Scene s;
    Gaussian g;
    g.position = Vec3(1.5, 2.5, 0.0);
    g.opacity = 1.0;
    g.color = Vec3(0.2, 0.6, 0.9);
    s.primitives.push_back(g);
    const Image img = render(s, cam, RenderMode::Composited).image;
    EXPECT_EQ(Vec3(img.at(1, 2).transpose()), g.color);
}

TEST(Render, TwoHalfOpaqueLayers) {
    const Camera cam = Camera::planar(4, 4, 1.0);
    Scene s;
    Gaussian g;
    g.position = Vec3(1.5, 1.5, 0.0);
    g.opacity = 0.5;
    g.color = Vec3(0.4, 0.8, 1.0);
    s.primitives.push_back(g);
    g.id = 1;
    s.primitives.push_back(g);
    const Image img = render(s, cam, RenderMode::Composited).image;
    const Vec3 px = img.at(1, 1).transpose();
    EXPECT_LT((px - 0.75 * g.color).norm(), 1e-15);
}

TEST(Render, AdditiveMatchesDirectSum) {
    std::mt19937_64 rng(1);
    const Camera cam = Camera::planar(12, 10, 0.1);
    const Scene s = random_scene(rng, 5, cam);
    const Image img = render(s, cam, RenderOptions{RenderMode::Additive, 0.0}).image;
    for (int row = 0; row < cam.height; ++row)
        for (int col = 0; col < cam.width; ++col) {
            const Vec2 x((col + 0.5) * 0.1, (row + 0.5) * 0.1);
            Vec3 sum = Vec3::Zero();
            for (const Gaussian &g : s.primitives) {
                const Vec2 d = x - g.position.head<2>();
                const Mat2 A = g.covariance().topLeftCorner<2, 2>();
                const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
                const double q = (A(1, 1) * d[0] * d[0] - 2 * A(0, 1) * d[0] * d[1] + A(0, 0) * d[1] * d[1]) / det;
                sum += g.color * g.opacity * std::exp(-0.5 * q);
            }
            EXPECT_LT((Vec3(img.at(col, row).transpose()) - sum).norm(), 1e-13);
        }
}

TEST(Render, EmptySceneIsBlack) {
    const Camera cam = Camera::planar(3, 2, 1.0);
    const Image img = render(Scene{}, cam).image;
    EXPECT_EQ(img.width, 3);
    EXPECT_EQ(img.height, 2);
    EXPECT_TRUE((img.pixels == 0.0).all());
}

TEST(Render, CompositedStaysInUnitCube) {
    std::mt19937_64 rng(2);
    const Camera cam = Camera::planar(16, 16, 0.0625);
    const Scene s = random_scene(rng, 30, cam);
    const Image img = render(s, cam).image;
    EXPECT_GE(img.pixels.minCoeff(), 0.0);
    EXPECT_LE(img.pixels.maxCoeff(), 1.0);
}

TEST(Render, PermutationInvariantBitwise) {
    std::mt19937_64 rng(3);
    const Camera cam = Camera::planar(16, 16, 0.0625);
    const Scene s = random_scene(rng, 12, cam);
    Scene shuffled = s;
    std::shuffle(shuffled.primitives.begin(), shuffled.primitives.end(), rng);
    const Image a = render(s, cam).image;
    const Image b = render(shuffled, cam).image;
    EXPECT_TRUE((a.pixels == b.pixels).all());
}

TEST(Render, AdditiveLinearInOpacity) {
    std::mt19937_64 rng(4);
    const Camera cam = Camera::planar(10, 10, 0.1);
    Scene s = random_scene(rng, 4, cam);
    s.primitives[2].opacity = 0.3;
    const RenderOptions opts{RenderMode::Additive, 0.0};
    Scene without = s;
    without.primitives.erase(without.primitives.begin() + 2);
    Scene doubled = s;
    doubled.primitives[2].opacity = 0.6;
    const PixelArray base = render(without, cam, opts).image.pixels;
    const PixelArray once = render(s, cam, opts).image.pixels - base;
    const PixelArray twice = render(doubled, cam, opts).image.pixels - base;
    EXPECT_LT((twice - 2.0 * once).abs().maxCoeff(), 1e-14);
}

TEST(Render, TapeTransmittanceNonIncreasing) {
    std::mt19937_64 rng(5);
    const Camera cam = Camera::planar(12, 12, 0.08);
    const Scene s = random_scene(rng, 20, cam);
    const RenderTape tape = render(s, cam).tape;
    ASSERT_EQ(tape.pixelCount(), 144u);
    for (std::size_t k = 0; k < tape.pixelCount(); ++k) {
        double prev = 1.0;
        for (std::size_t e = tape.offsets[k]; e < tape.offsets[k + 1]; ++e) {
            EXPECT_LE(tape.entries[e].transmittance, prev);
            EXPECT_GE(tape.entries[e].transmittance, 0.0);
            EXPECT_GE(tape.entries[e].sigma, kDefaultSigmaCutoff);
            prev = tape.entries[e].transmittance;
        }
    }
}

TEST(Render, DepthTieBrokenById) {
    Scene s;
    for (int i : {3, 1, 2}) {
        Gaussian g;
        g.id = i;
        s.primitives.push_back(g);
    }
    s.primitives[0].depth = 0.5;
    const auto order = compositing_order(s);
    ASSERT_EQ(order.size(), 3u);
    EXPECT_EQ(s.primitives[order[0]].id, 1);
    EXPECT_EQ(s.primitives[order[1]].id, 2);
    EXPECT_EQ(s.primitives[order[2]].id, 3);
}

TEST(Loss, Examples) {
    std::mt19937_64 rng(6);
    const Image t = random_image(rng, 5, 4);
    EXPECT_EQ(photometric_loss(t, t), 0.0);
    Image r = t;
    r.pixels += 0.1;
    EXPECT_NEAR(photometric_loss(r, t), 0.1, 1e-15);
}

TEST(Loss, MatchesLoopOracle) {
    std::mt19937_64 rng(7);
    const Image a = random_image(rng, 7, 3);
    const Image b = random_image(rng, 7, 3);
    double l1 = 0.0, l2 = 0.0;
    for (int row = 0; row < 3; ++row)
        for (int col = 0; col < 7; ++col)
            for (int ch = 0; ch < 3; ++ch) {
                const double d = a.at(col, row)[ch] - b.at(col, row)[ch];
                l1 += std::abs(d);
                l2 += d * d;
            }
    EXPECT_NEAR(photometric_loss(a, b), l1 / 63.0, 1e-15);
    EXPECT_NEAR(loss_value(LossKind::L2, a, b), l2 / 63.0, 1e-15);
    EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(63.0 / l2), 1e-12);
}

TEST(Loss, DimensionMismatchThrows) {
    EXPECT_THROW(photometric_loss(Image(2, 2), Image(2, 3)), DimensionMismatch);
}

TEST(Psnr, Examples) {
    Image t(4, 4);
    t.pixels.setConstant(0.5);
    EXPECT_TRUE(std::isinf(psnr(t, t)));
    Image r = t;
    r.pixels += 0.1;
    EXPECT_NEAR(psnr(r, t), 20.0, 1e-9);
}

TEST(LossGradient, L1ZeroAtZeroResidual) {
    Image t(2, 1);
    t.pixels << 0.5, 0.5, 0.5, 0.2, 0.2, 0.2;
    Image r = t;
    r.pixels(1, 0) = 0.3;
    const PixelArray g = loss_gradient(LossKind::L1, r, t);
    EXPECT_EQ(g(0, 0), 0.0);
    EXPECT_GT(g(1, 0), 0.0);
    EXPECT_EQ(g(1, 1), 0.0);
}
