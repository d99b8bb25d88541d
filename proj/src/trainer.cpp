// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/trainer.hpp"

#include "steepgs/diff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>
#include <unordered_map>

namespace steepgs {

namespace {

using ParamVec = Eigen::Matrix<double, 14, 1>;

/// Gradient in the optimizer's coordinates: position, log-scale, rotation,
/// opacity logit, color.
ParamVec
optimizer_gradient(const Gaussian &g, const GaussianGrad &grad, bool planar) {
    ParamVec v;
    v.segment<3>(0) = grad.position;
    v.segment<3>(3) = g.scale.cwiseProduct(grad.scale);
    Vec4 dq = grad.rotation;
    if (planar) {
        dq[1] = 0.0;
        dq[2] = 0.0;
    }
    v.segment<4>(6) = dq;
    v[10] = g.opacity * (1.0 - g.opacity) * grad.opacity;
    v.segment<3>(11) = grad.color;
    return v;
}

double
logit(double o) {
    o = std::clamp(o, 1e-9, 1.0 - 1e-9);
    return std::log(o / (1.0 - o));
}

double
sigmoid(double z) {
    return 1.0 / (1.0 + std::exp(-z));
}

/// Per-primitive optimizer memory, carried across densification by id.
struct OptimizerState {
    ParamVec first = ParamVec::Zero();
    ParamVec second = ParamVec::Zero();
    int steps = 0;
};

ParamVec
optimizer_step(OptimizerState &st, const ParamVec &grad, const TrainConfig &cfg) {
    switch (cfg.optimizer) {
    case Optimizer::GradientDescent:
        return grad;
    case Optimizer::Momentum:
        st.first = cfg.momentum * st.first + grad;
        return st.first;
    case Optimizer::Adam:
        break;
    }
    ++st.steps;
    st.first = cfg.momentum * st.first + (1.0 - cfg.momentum) * grad;
    st.second = cfg.adamBeta2 * st.second + (1.0 - cfg.adamBeta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.momentum, st.steps);
    const double c2 = 1.0 - std::pow(cfg.adamBeta2, st.steps);
    return (st.first / c1).array() / ((st.second / c2).array().sqrt() + cfg.adamEps);
}

/// Parameters with a zero step keep their exact bits; the log, logit and
/// normalization round trips would otherwise perturb a converged scene.
void
apply_update(Gaussian &g, const ParamVec &step, const LearningRates &lr, double minScale) {
    g.position -= lr.position * step.segment<3>(0);
    for (int k = 0; k < 3; ++k)
        if (step[3 + k] != 0.0)
            g.scale[k] = std::max(minScale, std::exp(std::log(g.scale[k]) - lr.scale * step[3 + k]));
    if (!step.segment<4>(6).isZero(0.0)) {
        g.rotation -= lr.rotation * step.segment<4>(6);
        g.rotation.normalize();
    }
    if (step[10] != 0.0)
        g.opacity = sigmoid(logit(g.opacity) - lr.opacity * step[10]);
    g.color = (g.color - lr.color * step.segment<3>(11)).cwiseMax(0.0).cwiseMin(1.0);
}

struct StepResult {
    double loss = 0.0;
    double mse = 0.0;
    std::vector<RenderResult> renders;
    std::vector<PerGaussianGrads> grads;
};

StepResult
forward_backward(const Scene &scene, std::span<const View> views, std::span<const std::size_t> active,
                 const TrainConfig &cfg, bool withGrads) {
    StepResult out;
    const double weight = 1.0 / static_cast<double>(active.size());
    for (std::size_t v : active) {
        const View &view = views[v];
        RenderResult r = render(scene, view.cam, RenderOptions{cfg.renderMode, cfg.sigmaCutoff});
        out.loss += weight * loss_value(cfg.loss, r.image, view.target);
        out.mse += weight * (r.image.pixels - view.target.pixels).square().mean();
        if (withGrads)
            out.grads.push_back(backprop(scene, view.cam, view.target, r.tape, cfg.loss, weight));
        out.renders.push_back(std::move(r));
    }
    return out;
}

double
psnr_from_mse(double mse) {
    return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
}

} // namespace

void
TrainConfig::validate() const {
    if (steps < 1)
        throw InvalidArgument("train: steps must be >= 1");
    for (double r : {lr.position, lr.scale, lr.rotation, lr.opacity, lr.color})
        if (!(r > 0.0))
            throw InvalidArgument("train: learning rates must be > 0");
    if (optimizer != Optimizer::GradientDescent && !(momentum >= 0.0 && momentum < 1.0))
        throw InvalidArgument("train: momentum must lie in [0, 1)");
    if (optimizer == Optimizer::Adam && (!(adamBeta2 >= 0.0 && adamBeta2 < 1.0) || !(adamEps > 0.0)))
        throw InvalidArgument("train: adam needs beta2 in [0, 1) and eps > 0");
    if (logInterval < 1)
        throw InvalidArgument("train: log interval must be >= 1");
    if (!(sigmaCutoff >= 0.0) || !(minScalePixels > 0.0))
        throw InvalidArgument("train: sigma cutoff must be >= 0 and min scale > 0");
    densify.validate();
}

std::pair<double, double>
evaluate(const Scene &scene, std::span<const View> views, const TrainConfig &cfg) {
    std::vector<std::size_t> all(views.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    const StepResult r = forward_backward(scene, views, all, cfg, false);
    return {r.loss, psnr_from_mse(r.mse)};
}

TrainReport
train(const Scene &scene0, std::span<const View> views, const TrainConfig &cfg, const TrainHooks &hooks) {
    cfg.validate();
    if (views.empty())
        throw InvalidArgument("train: need at least one view");
    if (scene0.empty())
        throw InvalidArgument("train: initial scene is empty");
    scene0.validate();
    for (const View &v : views) {
        v.cam.validate();
        if (v.target.width != v.cam.width || v.target.height != v.cam.height)
            throw DimensionMismatch("train: target size differs from its camera");
    }

    TrainReport report;
    Scene scene = scene0;
    const bool planar = scene.mode == SceneMode::Planar;
    const double minScale = cfg.minScalePixels * views.front().cam.pixelScale;
    std::mt19937_64 rng(cfg.seed);
    SplitAccumulator acc(scene);
    std::vector<OptimizerState> state(scene.size());
    const bool densifying = cfg.policy != DensifyPolicy::None;
    const int until = cfg.densifyUntil();
    const int interval = cfg.densify.interval;
    // last step whose statistics can still feed a densification round
    int lastRound = 0;
    if (densifying)
        for (int t = interval; t <= std::min(until, cfg.steps); t += interval)
            if (t >= cfg.densify.warmup)
                lastRound = t;

    std::vector<std::size_t> active(views.size());
    for (std::size_t i = 0; i < active.size(); ++i)
        active[i] = i;
    std::uniform_int_distribution<std::size_t> pickView(0, views.size() - 1);

    for (int t = 1; t <= cfg.steps; ++t) {
        const bool densifyNow = densifying && t % interval == 0 && t >= cfg.densify.warmup && t <= until;
        if (cfg.perViewSampling)
            active.assign(1, pickView(rng));
        StepResult step = forward_backward(scene, views, active, cfg, !densifyNow);
        if (!std::isfinite(step.loss))
            throw NonFiniteLoss("train: loss became non-finite at step " + std::to_string(t) + " with " +
                                std::to_string(scene.size()) + " primitives");

        TrainRow row;
        row.step = t;
        row.loss = step.loss;
        row.psnr = psnr_from_mse(step.mse);

        if (densifyNow) {
            DensifyEvent event;
            DensifyContext ctx{t, cfg.lr.position, &rng};
            Scene next = densify(scene, acc, cfg.policy, cfg.densify, ctx, event);
            next = prune(next, cfg.densify);
            event.pointsAfter = next.size();

            std::unordered_map<std::int64_t, OptimizerState> byId;
            for (std::size_t i = 0; i < scene.size(); ++i)
                byId.emplace(scene.primitives[i].id, state[i]);
            state.assign(next.size(), OptimizerState{});
            for (std::size_t i = 0; i < next.size(); ++i)
                if (auto it = byId.find(next.primitives[i].id); it != byId.end())
                    state[i] = it->second;

            scene = std::move(next);
            acc.reset(scene);
            row.event = event.csvCell();
            report.events.push_back(event);
            if (hooks.onDensify)
                hooks.onDensify(event);
        } else {
            if (densifying && t <= lastRound) {
                std::vector<ViewPass> passes;
                for (std::size_t k = 0; k < active.size(); ++k)
                    passes.push_back(ViewPass{views[active[k]].cam, step.renders[k].tape, step.grads[k]});
                accumulate_split_stats(acc, passes, scene);
            }
            for (std::size_t i = 0; i < scene.size(); ++i) {
                GaussianGrad total;
                for (const auto &g : step.grads)
                    total += g.grads[i];
                const ParamVec grad = optimizer_gradient(scene.primitives[i], total, planar);
                apply_update(scene.primitives[i], optimizer_step(state[i], grad, cfg), cfg.lr, minScale);
            }
        }

        row.points = scene.size();
        if (t % cfg.logInterval == 0 || t == cfg.steps)
            report.rows.push_back(row);
        if (hooks.checkpoint && hooks.checkpointInterval > 0 && t % hooks.checkpointInterval == 0)
            hooks.checkpoint(t, scene);
    }

    report.finalScene = scene;
    std::tie(report.finalLoss, report.finalPsnr) = evaluate(scene, views, cfg);
    return report;
}

Scene
initialize_scene(int count, const Camera &cam, SceneMode mode, std::uint64_t seed) {
    if (count < 1)
        throw InvalidArgument("initialize_scene: count must be >= 1");
    cam.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Scene scene;
    scene.mode = mode;
    const double w = cam.width * cam.pixelScale;
    const double h = cam.height * cam.pixelScale;
    // least-squares preimage of an image point under the affine camera
    const Eigen::Matrix<double, 3, 2> pinv = cam.P.transpose() * inverse_2x2<double>(cam.P * cam.P.transpose());
    for (int i = 0; i < count; ++i) {
        Gaussian g;
        g.id = i;
        const Vec2 x(unit(rng) * w, unit(rng) * h);
        g.position = mode == SceneMode::Planar ? Vec3(x[0], x[1], 0.0) : Vec3(pinv * (x - cam.b));
        g.scale = Vec3::Constant(2.0 * cam.pixelScale);
        g.opacity = 0.5;
        g.color = Vec3::Constant(0.5);
        g.depth = unit(rng);
        scene.primitives.push_back(g);
    }
    return scene;
}

} // namespace steepgs
