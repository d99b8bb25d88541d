// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace steepgs;

namespace {

constexpr int kSize = 24;
constexpr double kPitch = 1.0 / kSize;

Gaussian
blob(std::int64_t id, Vec2 center, double scale, double opacity, Vec3 color) {
    Gaussian g;
    g.id = id;
    g.position = Vec3(center[0], center[1], 0.0);
    g.scale = Vec3(scale, scale, 1.0);
    g.opacity = opacity;
    g.color = color;
    return g;
}

View
view_of(const Scene &truth) {
    const Camera cam = Camera::planar(kSize, kSize, kPitch);
    return View{cam, render(truth, cam).image};
}

TrainConfig
short_config(DensifyPolicy policy, int steps) {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.policy = policy;
    cfg.densify.warmup = 100;
    cfg.densify.interval = 100;
    cfg.logInterval = 10;
    return cfg;
}

} // namespace

TEST(Train, PolicyNoneKeepsCount) {
    Scene truth;
    truth.primitives.push_back(blob(0, {0.3, 0.4}, 0.1, 0.9, {0.9, 0.2, 0.1}));
    const std::vector<View> views{view_of(truth)};
    const Scene init = initialize_scene(8, views[0].cam, SceneMode::Planar, 3);
    const TrainReport rep = train(init, views, short_config(DensifyPolicy::None, 300));
    for (const TrainRow &row : rep.rows) {
        EXPECT_EQ(row.points, 8u);
        EXPECT_TRUE(row.event.empty());
    }
    EXPECT_TRUE(rep.events.empty());
}

TEST(Train, RowsStrictlyIncreasing) {
    Scene truth;
    truth.primitives.push_back(blob(0, {0.5, 0.5}, 0.15, 0.8, {0.3, 0.6, 0.9}));
    const std::vector<View> views{view_of(truth)};
    const Scene init = initialize_scene(4, views[0].cam, SceneMode::Planar, 1);
    TrainConfig cfg = short_config(DensifyPolicy::Sdc, 205);
    cfg.logInterval = 7;
    const TrainReport rep = train(init, views, cfg);
    ASSERT_FALSE(rep.rows.empty());
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        EXPECT_GT(rep.rows[i].step, rep.rows[i - 1].step);
    EXPECT_EQ(rep.rows.back().step, 205);
}

TEST(Train, ExactSceneStaysPut) {
    Scene truth;
    truth.primitives.push_back(blob(0, {0.5, 0.5}, 0.12, 0.7, {0.2, 0.5, 0.8}));
    const std::vector<View> views{view_of(truth)};
    const TrainReport rep = train(truth, views, short_config(DensifyPolicy::Sdc, 300));
    EXPECT_TRUE(rep.events.size() > 0);
    for (const DensifyEvent &e : rep.events)
        EXPECT_EQ(e.splits, 0);
    ASSERT_EQ(rep.finalScene.size(), 1u);
    const Gaussian &g = rep.finalScene.primitives[0];
    EXPECT_LT((g.position - truth.primitives[0].position).norm(), 1e-12);
    EXPECT_NEAR(g.opacity, 0.7, 1e-12);
    EXPECT_LT(rep.finalLoss, 1e-12);
}

TEST(Train, ConvexCaseLossNonIncreasing) {
    Scene truth;
    truth.primitives.push_back(blob(0, {0.5, 0.5}, 0.15, 0.8, {0.7, 0.5, 0.3}));
    const std::vector<View> views{view_of(truth)};
    Scene init;
    init.primitives.push_back(blob(0, {0.53, 0.48}, 0.13, 0.6, {0.6, 0.6, 0.4}));
    TrainConfig cfg = short_config(DensifyPolicy::None, 200);
    cfg.logInterval = 1;
    cfg.loss = LossKind::L2;
    const TrainReport rep = train(init, views, cfg);
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        EXPECT_LE(rep.rows[i].loss, rep.rows[i - 1].loss * (1.0 + 1e-12));
    EXPECT_LT(rep.rows.back().loss, rep.rows.front().loss);
}

TEST(Train, SdcEscapesWhereNoneStays) {
    Scene truth;
    truth.primitives.push_back(blob(0, {0.32, 0.5}, 0.09, 0.9, {0.9, 0.6, 0.2}));
    truth.primitives.push_back(blob(1, {0.68, 0.5}, 0.09, 0.9, {0.9, 0.6, 0.2}));
    const std::vector<View> views{view_of(truth)};
    Scene init;
    init.primitives.push_back(blob(0, {0.5, 0.5}, 0.12, 0.5, {0.5, 0.5, 0.5}));
    TrainConfig cfg = short_config(DensifyPolicy::Sdc, 2000);
    cfg.densify.warmup = 500;
    cfg.logInterval = 100;
    const TrainReport sdc = train(init, views, cfg);
    cfg.policy = DensifyPolicy::None;
    const TrainReport none = train(init, views, cfg);
    int splits = 0;
    for (const DensifyEvent &e : sdc.events)
        splits += e.splits;
    EXPECT_GE(splits, 1);
    EXPECT_LT(sdc.finalLoss, none.finalLoss);
}

TEST(Train, Deterministic) {
    Scene truth;
    truth.primitives.push_back(blob(0, {0.4, 0.6}, 0.1, 0.9, {0.1, 0.8, 0.4}));
    truth.primitives.push_back(blob(1, {0.7, 0.3}, 0.06, 0.9, {0.8, 0.2, 0.4}));
    const std::vector<View> views{view_of(truth)};
    const Scene init = initialize_scene(6, views[0].cam, SceneMode::Planar, 9);
    for (DensifyPolicy p : {DensifyPolicy::Sdc, DensifyPolicy::Adc}) {
        TrainConfig cfg = short_config(p, 400);
        cfg.optimizer = Optimizer::Adam;
        cfg.lr = LearningRates{1e-3, 1e-2, 1e-2, 0.05, 1e-2};
        cfg.densify.adc.gradThreshold = 1e-4;
        const TrainReport a = train(init, views, cfg);
        const TrainReport b = train(init, views, cfg);
        ASSERT_EQ(a.rows.size(), b.rows.size());
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            EXPECT_EQ(a.rows[i].loss, b.rows[i].loss);
            EXPECT_EQ(a.rows[i].points, b.rows[i].points);
            EXPECT_EQ(a.rows[i].event, b.rows[i].event);
        }
        ASSERT_EQ(a.finalScene.size(), b.finalScene.size());
        for (std::size_t i = 0; i < a.finalScene.size(); ++i)
            EXPECT_EQ(a.finalScene.primitives[i].position, b.finalScene.primitives[i].position);
    }
}

TEST(Train, CountChangesOnlyAtDensifySteps) {
    Scene truth;
    truth.primitives.push_back(blob(0, {0.3, 0.3}, 0.08, 0.9, {0.9, 0.9, 0.2}));
    truth.primitives.push_back(blob(1, {0.7, 0.7}, 0.12, 0.9, {0.2, 0.3, 0.9}));
    const std::vector<View> views{view_of(truth)};
    const Scene init = initialize_scene(5, views[0].cam, SceneMode::Planar, 4);
    TrainConfig cfg = short_config(DensifyPolicy::Sdc, 400);
    cfg.logInterval = 1;
    const TrainReport rep = train(init, views, cfg);
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].points != rep.rows[i - 1].points)
            EXPECT_FALSE(rep.rows[i].event.empty()) << "step " << rep.rows[i].step;
}

TEST(Train, ScaleOpacityAndRotationStayValid) {
    Scene truth;
    truth.primitives.push_back(blob(0, {0.5, 0.5}, 0.2, 1.0, {1.0, 1.0, 1.0}));
    const std::vector<View> views{view_of(truth)};
    const Scene init = initialize_scene(6, views[0].cam, SceneMode::Planar, 2);
    TrainConfig cfg = short_config(DensifyPolicy::None, 150);
    cfg.optimizer = Optimizer::Momentum;
    const TrainReport rep = train(init, views, cfg);
    EXPECT_NO_THROW(rep.finalScene.validate());
}

TEST(Train, RejectsBadInput) {
    const Camera cam = Camera::planar(4, 4, 0.25);
    const std::vector<View> views{View{cam, Image(4, 4)}};
    Scene one;
    one.primitives.push_back(blob(0, {0.5, 0.5}, 0.2, 0.5, {0.5, 0.5, 0.5}));
    EXPECT_THROW(train(Scene{}, views, TrainConfig{}), InvalidArgument);
    EXPECT_THROW(train(one, {}, TrainConfig{}), InvalidArgument);
    TrainConfig bad;
    bad.lr.position = 0.0;
    EXPECT_THROW(train(one, views, bad), InvalidArgument);
    const std::vector<View> mismatched{View{cam, Image(3, 4)}};
    EXPECT_THROW(train(one, mismatched, TrainConfig{}), DimensionMismatch);
}

TEST(Initialize, SeededAndInsideImage) {
    const Camera cam = Camera::planar(32, 16, 0.5);
    const Scene a = initialize_scene(50, cam, SceneMode::Planar, 7);
    const Scene b = initialize_scene(50, cam, SceneMode::Planar, 7);
    ASSERT_EQ(a.size(), 50u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Gaussian &g = a.primitives[i];
        EXPECT_EQ(g.position, b.primitives[i].position);
        EXPECT_GE(g.position[0], 0.0);
        EXPECT_LE(g.position[0], 16.0);
        EXPECT_GE(g.position[1], 0.0);
        EXPECT_LE(g.position[1], 8.0);
        EXPECT_EQ(g.scale, Vec3::Constant(1.0));
        EXPECT_EQ(g.opacity, 0.5);
        EXPECT_EQ(g.color, Vec3::Constant(0.5));
    }
    EXPECT_NO_THROW(a.validate());
}
