// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "steepgs/density.hpp"
#include "steepgs/primitives.hpp"
#include "steepgs/renderer.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace steepgs {

struct LearningRates {
    double position = 0.05;
    /// Applied to log(scale).
    double scale = 0.5;
    double rotation = 0.5;
    /// Applied to logit(opacity).
    double opacity = 5.0;
    double color = 1.0;
};

enum class Optimizer {
    GradientDescent,
    /// heavy ball, velocity = momentum * velocity + grad
    Momentum,
    /// bias-corrected Adam; each primitive keeps its own step counter
    Adam,
};

struct TrainConfig {
    int steps = 2000;
    LearningRates lr;
    Optimizer optimizer = Optimizer::GradientDescent;
    /// Momentum coefficient, also Adam's first-moment decay.
    double momentum = 0.9;
    double adamBeta2 = 0.999;
    double adamEps = 1e-15;
    DensifyPolicy policy = DensifyPolicy::Sdc;
    DensifyConfig densify;
    std::uint64_t seed = 0;
    /// Sample one view per step instead of the full batch.
    bool perViewSampling = false;
    LossKind loss = LossKind::L1;
    RenderMode renderMode = RenderMode::Composited;
    double sigmaCutoff = kDefaultSigmaCutoff;
    int logInterval = 10;
    /// Lower bound on every scale, as a multiple of the pixel pitch.
    double minScalePixels = 0.25;

    void validate() const;

    int
    densifyUntil() const {
        return densify.densifyUntil.value_or(steps / 2);
    }
};

struct TrainRow {
    int step = 0;
    double loss = 0.0;
    double psnr = 0.0;
    std::size_t points = 0;
    /// Densification summary if a round ran at this step, else empty.
    std::string event;
};

struct TrainReport {
    std::vector<TrainRow> rows;
    std::vector<DensifyEvent> events;
    Scene finalScene;
    /// Full-batch loss and PSNR of finalScene.
    double finalLoss = 0.0;
    double finalPsnr = 0.0;
};

struct TrainHooks {
    std::function<void(int step, const Scene &scene)> checkpoint;
    int checkpointInterval = 0;
    std::function<void(const DensifyEvent &event)> onDensify;
};

/// Runs gradient descent on the summed view losses, densifying every
/// `interval` steps inside [warmup, densifyUntil]. A densification step
/// replaces the parameter update; the splitting
/// statistics are reset after every round.
TrainReport train(const Scene &scene0, std::span<const View> views, const TrainConfig &cfg,
                  const TrainHooks &hooks = {});

/// Full-batch loss and PSNR of a scene over the views.
std::pair<double, double> evaluate(const Scene &scene, std::span<const View> views, const TrainConfig &cfg);

/// `count` primitives at seeded uniform positions over the first view's
/// image plane, isotropic scale of two pixel pitches, opacity 0.5 and
/// mid-gray color. Depth keys are seeded uniform in [0, 1).
Scene initialize_scene(int count, const Camera &cam, SceneMode mode, std::uint64_t seed);

} // namespace steepgs
