// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace steepgs;

namespace {

Scene
two_blobs() {
    Scene s;
    for (int i = 0; i < 2; ++i) {
        Gaussian g;
        g.id = i;
        g.position = Vec3(0.35 + 0.3 * i, 0.5, 0.0);
        g.scale = Vec3(0.12, 0.08 + 0.04 * i, 1.0);
        g.rotation = planar_rotation(0.3 * i);
        g.opacity = 0.6;
        g.color = Vec3(0.3 + 0.4 * i, 0.5, 0.7 - 0.4 * i);
        s.primitives.push_back(g);
    }
    return s;
}

std::vector<View>
offset_view(const Scene &s) {
    const Camera cam = Camera::planar(16, 16, 1.0 / 16);
    View v{cam, render(s, cam, RenderOptions{RenderMode::Additive, 0.0}).image};
    for (Eigen::Index i = 0; i < v.target.pixels.size(); ++i)
        v.target.pixels.data()[i] += (i % 2 ? 0.1 : -0.15);
    return {v};
}

} // namespace

TEST(FdGradient, ExactOnQuadratic) {
    const Scene s = two_blobs();
    const auto loss = [](const Scene &x) {
        double v = 0.0;
        for (const Gaussian &g : x.primitives)
            v += (g.position - Vec3(1, 2, 3)).squaredNorm() + 3.0 * g.opacity * g.opacity + g.color.sum();
        return v;
    };
    const PerGaussianGrads f = fd_gradient(s, loss, 1e-4);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_LT((f.grads[i].position - 2.0 * (s.primitives[i].position - Vec3(1, 2, 3))).norm(), 1e-9);
        EXPECT_NEAR(f.grads[i].opacity, 6.0 * s.primitives[i].opacity, 1e-9);
        EXPECT_LT((f.grads[i].color - Vec3::Ones()).norm(), 1e-9);
        EXPECT_LT(f.grads[i].scale.norm(), 1e-12);
    }
}

TEST(FdStep, RelativeWithUnitFloor) {
    EXPECT_EQ(fd_step(1e-5, 0.0), 1e-5);
    EXPECT_EQ(fd_step(1e-5, 0.5), 1e-5);
    EXPECT_EQ(fd_step(1e-5, -4.0), 4e-5);
}

TEST(FdPositionHessian, QuadraticFormAtCenter) {
    Gaussian g;
    g.scale = Vec3(0.5, 2.0, 1.0);
    const Camera cam = Camera::planar(4, 4, 1.0);
    const Mat3 H = fd_position_hessian(g, cam, Vec2(0.0, 0.0), 1e-4);
    EXPECT_NEAR(H(0, 0), -4.0, 1e-6);
    EXPECT_NEAR(H(1, 1), -0.25, 1e-6);
    EXPECT_NEAR(H(2, 2), 0.0, 1e-12);
}

TEST(SplitSpec, ValidateRejectsInadmissible) {
    SplitSpec s = SplitSpec::steepest(0, Vec3(2, 0, 0), 0.1);
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.offsets[0], Vec3(1, 0, 0));
    s.weights = {0.7, 0.7};
    EXPECT_THROW(s.validate(), InvalidArgument);
    s = SplitSpec::steepest(0, Vec3(1, 0, 0), 0.1);
    s.offsets[0] = Vec3(2, 0, 0);
    EXPECT_THROW(s.validate(), InvalidArgument);
    s = SplitSpec::steepest(0, Vec3(1, 0, 0), 0.1);
    s.offsets[1] = Vec3(0, 0, 0);
    EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(ExpandSplit, ReplacesTargetInPlace) {
    const Scene s = two_blobs();
    const Scene out = expand_split(s, SplitSpec::steepest(0, Vec3(0, 1, 0), 0.2));
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out.primitives[0].position, s.primitives[0].position + Vec3(0, 0.2, 0));
    EXPECT_EQ(out.primitives[1].position, s.primitives[0].position - Vec3(0, 0.2, 0));
    EXPECT_EQ(out.primitives[2].id, 1);
    EXPECT_EQ(out.primitives[0].opacity + out.primitives[1].opacity, s.primitives[0].opacity);
    EXPECT_THROW(expand_split(s, SplitSpec::steepest(9, Vec3(1, 0, 0), 0.1)), InvalidArgument);
}

TEST(BruteForceSplit, ZeroStepKeepsLoss) {
    const Scene s = two_blobs();
    const auto views = offset_view(s);
    const double base = scene_loss(s, views, LossSetup{RenderMode::Additive, LossKind::L1, 0.0});
    EXPECT_NEAR(brute_force_split_loss(s, SplitSpec::steepest(1, Vec3(1, 0, 0), 0.0), views), base, 1e-15);
}

TEST(SplitExpansion, ZeroEpsilonHasZeroResidual) {
    const Scene s = two_blobs();
    const auto views = offset_view(s);
    const SplitExpansionTerms t = split_expansion_residual(s, SplitSpec::steepest(0, Vec3(1, 1, 0), 1.0), views, 0.0);
    EXPECT_NEAR(t.residual, 0.0, 1e-15);
    EXPECT_EQ(t.gradientTerm, 0.0);
    EXPECT_EQ(t.splittingTerm, 0.0);
}

TEST(SplitExpansion, ResidualShrinksFasterThanSquare) {
    const Scene s = two_blobs();
    const auto views = offset_view(s);
    SplitSpec spec;
    spec.target = 1;
    spec.weights = {0.25, 0.75};
    spec.offsets = {Vec3(0.6, -0.3, 0), Vec3(-0.2, 0.1, 0)};
    spec.meanShift = Vec3(0.1, 0.2, 0);
    spec.scale = 1.0;
    const double r1 = split_expansion_residual(s, spec, views, 0.02).residual;
    const double r2 = split_expansion_residual(s, spec, views, 0.01).residual;
    EXPECT_GT(r1, 0.0);
    EXPECT_LT(r2 / r1, 0.25);
}

TEST(CharpolyBisection, Diagonal) {
    const auto ev = charpoly_bisection_eigenvalues(Mat3(Vec3(3.0, -1.0, 2.0).asDiagonal()));
    EXPECT_NEAR(ev[0], -1.0, 1e-12);
    EXPECT_NEAR(ev[1], 2.0, 1e-12);
    EXPECT_NEAR(ev[2], 3.0, 1e-12);
}

TEST(SaddleFixture, HasZeroGradient) {
    const SaddleFixture f = make_saddle_fixture();
    const LossSetup setup{RenderMode::Additive, LossKind::L2, 0.0};
    const PerGaussianGrads g = fd_gradient(f.scene, f.views, setup, 1e-5);
    EXPECT_LT(g.grads[0].position.norm(), 1e-8);
    EXPECT_LT(std::abs(g.grads[0].opacity), 1e-8);
}

TEST(Checks, SmallRunsPass) {
    EXPECT_TRUE(check_hessian_exactness(10).passed);
    EXPECT_TRUE(check_gradient_exactness(3).passed);
    EXPECT_TRUE(check_eigensolver(50).passed);
    EXPECT_TRUE(check_split_expansion_cubic(3).passed);
    EXPECT_TRUE(check_steepest_split_optimality(3).passed);
    EXPECT_TRUE(check_psd_no_gain(3).passed);
}

TEST(Checks, RegistryIsOrdered) {
    const auto &checks = all_checks();
    ASSERT_EQ(checks.size(), 7u);
    EXPECT_EQ(checks.front().name, "hessian");
    EXPECT_EQ(checks.back().name, "saddle-escape");
}

TEST(Checks, FormatLine) {
    CheckResult r{"demo", true, 1e-7, 1e-5, 0.5, 2.0, "ok"};
    const std::string line = format_check(r);
    EXPECT_EQ(line.rfind("PASS", 0), 0u);
    EXPECT_NE(line.find("demo"), std::string::npos);
    r.passed = false;
    EXPECT_EQ(format_check(r).rfind("FAIL", 0), 0u);
}
