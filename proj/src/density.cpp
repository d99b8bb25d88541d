// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/density.hpp"

#include "steepgs/eigsym.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_map>

namespace steepgs {

void
DensifyConfig::validate() const {
    if (!(epsSplit <= 0.0))
        throw InvalidArgument("densify: eps_split must be <= 0");
    if (!(stepValue > 0.0))
        throw InvalidArgument("densify: step value must be > 0");
    if (budget && *budget < 0)
        throw InvalidArgument("densify: budget must be >= 0");
    if (epsGrad && !(*epsGrad >= 0.0))
        throw InvalidArgument("densify: eps_grad must be >= 0");
    if (!(adc.scaleFactor > 0.0 && adc.scaleFactor < 1.0))
        throw InvalidArgument("densify: adc scale factor must lie in (0, 1)");
    if (!(adc.gradThreshold >= 0.0) || !(adc.scaleThreshold >= 0.0) || !(pruneOpacity >= 0.0))
        throw InvalidArgument("densify: thresholds must be >= 0");
    if (interval < 1 || warmup < 0)
        throw InvalidArgument("densify: interval must be >= 1 and warmup >= 0");
}

std::string
to_string(DensifyPolicy policy) {
    switch (policy) {
    case DensifyPolicy::None:
        return "none";
    case DensifyPolicy::Sdc:
        return "sdc";
    case DensifyPolicy::Adc:
        return "adc";
    case DensifyPolicy::SdcBudgeted:
        return "sdc-budgeted";
    case DensifyPolicy::Compactest:
        return "compactest";
    }
    return "none";
}

DensifyPolicy
parse_policy(const std::string &name) {
    for (auto p : {DensifyPolicy::None, DensifyPolicy::Sdc, DensifyPolicy::Adc, DensifyPolicy::SdcBudgeted,
                   DensifyPolicy::Compactest})
        if (to_string(p) == name)
            return p;
    throw InvalidArgument("unknown densify policy '" + name + "'");
}

void
SplitAccumulator::reset(const Scene &scene) {
    stats_.assign(scene.size(), SplitStats{});
    for (std::size_t i = 0; i < scene.size(); ++i)
        stats_[i].id = scene.primitives[i].id;
}

void
SplitAccumulator::checkMatches(const Scene &scene) const {
    if (stats_.size() != scene.size())
        throw StaleState("split accumulator tracks " + std::to_string(stats_.size()) + " primitives, scene has " +
                         std::to_string(scene.size()));
    for (std::size_t i = 0; i < stats_.size(); ++i)
        if (stats_[i].id != scene.primitives[i].id)
            throw StaleState("split accumulator id mismatch at index " + std::to_string(i));
}

void
accumulate_split_stats(SplitAccumulator &acc, std::span<const ViewPass> views, const Scene &scene) {
    acc.checkMatches(scene);
    for (const ViewPass &view : views) {
        const RenderTape &tape = view.tape;
        if (view.grads.grads.size() != scene.size() || view.grads.dLdSigma.size() != tape.entries.size() ||
            tape.projected.size() != scene.size())
            throw StaleState("split accumulation: gradients and tape are from different passes");
        for (int row = 0; row < tape.height; ++row) {
            for (int col = 0; col < tape.width; ++col) {
                const std::size_t pix = static_cast<std::size_t>(row) * tape.width + col;
                const Vec2 x = view.cam.pixelCenter(col, row);
                for (std::size_t k = tape.offsets[pix]; k < tape.offsets[pix + 1]; ++k) {
                    const double g = view.grads.dLdSigma[k];
                    if (g == 0.0)
                        continue;
                    const std::uint32_t i = tape.entries[k].primitive;
                    acc[i].S += g * position_hessian(tape.projected[i], view.cam.P, x);
                }
            }
        }
        for (std::size_t i = 0; i < scene.size(); ++i) {
            acc[i].G += view.grads.grads[i].position;
            acc[i].viewGradNorm += view.grads.grads[i].mean2d.norm();
            acc[i].viewSamples += 1;
        }
    }
    // position_hessian mirrors its upper triangle, so every increment and
    // therefore every sum is exactly symmetric
    for (std::size_t i = 0; i < acc.size(); ++i)
        acc[i].count += 1;
}

void
accumulate_split_stats(SplitAccumulator &acc, const PerGaussianGrads &grads, const RenderTape &tape,
                       const Scene &scene, const Camera &cam) {
    const ViewPass pass{cam, tape, grads};
    accumulate_split_stats(acc, std::span<const ViewPass>(&pass, 1), scene);
}

std::vector<SplitDecision>
sdc_decide(const SplitAccumulator &acc, const DensifyConfig &cfg, SceneMode mode) {
    std::vector<SplitDecision> out;
    out.reserve(acc.size());
    for (const SplitStats &st : acc.stats()) {
        SplitDecision d;
        d.id = st.id;
        if (st.count <= 0) {
            out.push_back(d);
            continue;
        }
        const Mat3 mean = st.S / static_cast<double>(st.count);
        if (mode == SceneMode::Planar) {
            const EigenPair2 pair = min_eigpair<double>(Mat2(mean.topLeftCorner<2, 2>()));
            d.lambdaMin = pair.value;
            d.direction = Vec3(pair.vector[0], pair.vector[1], 0.0);
        } else {
            const EigenPair3 pair = min_eigpair<double>(mean);
            d.lambdaMin = pair.value;
            d.direction = pair.vector;
        }
        d.predictedRate = d.lambdaMin / 2.0;
        bool split = d.lambdaMin < cfg.epsSplit;
        if (split && cfg.epsGrad) {
            const Vec3 g = st.G / static_cast<double>(st.count);
            split = g.norm() <= *cfg.epsGrad;
        }
        if (split && cfg.adcPrefilter) {
            const double meanNorm = st.viewSamples > 0 ? st.viewGradNorm / st.viewSamples : 0.0;
            split = meanNorm >= cfg.adc.gradThreshold;
        }
        d.verdict = split ? Verdict::Split : Verdict::Keep;
        out.push_back(d);
    }
    return out;
}

std::vector<SplitDecision>
select_budgeted(std::vector<SplitDecision> decisions, int budget) {
    if (budget < 0)
        throw InvalidArgument("select_budgeted: budget must be >= 0");
    std::vector<std::size_t> splits;
    for (std::size_t i = 0; i < decisions.size(); ++i)
        if (decisions[i].verdict == Verdict::Split)
            splits.push_back(i);
    if (splits.size() <= static_cast<std::size_t>(budget))
        return decisions;
    std::sort(splits.begin(), splits.end(), [&](std::size_t a, std::size_t b) {
        if (decisions[a].lambdaMin != decisions[b].lambdaMin)
            return decisions[a].lambdaMin < decisions[b].lambdaMin;
        return decisions[a].id < decisions[b].id;
    });
    for (std::size_t k = static_cast<std::size_t>(budget); k < splits.size(); ++k)
        decisions[splits[k]].verdict = Verdict::Keep;
    return decisions;
}

double
split_step(const Gaussian &parent, const Vec3 &direction, const DensifyConfig &cfg) {
    if (cfg.stepPolicy == StepPolicy::Absolute)
        return cfg.stepValue;
    return cfg.stepValue * std::sqrt(direction.dot(parent.covariance() * direction));
}

Scene
sdc_apply(const Scene &scene, std::span<const SplitDecision> decisions, const DensifyConfig &cfg) {
    std::unordered_map<std::int64_t, const SplitDecision *> byId;
    for (const auto &d : decisions)
        if (d.verdict == Verdict::Split)
            byId[d.id] = &d;
    Scene out;
    out.mode = scene.mode;
    out.primitives.reserve(scene.size() + byId.size());
    std::int64_t nextId = scene.nextId();
    for (const Gaussian &g : scene.primitives) {
        const auto it = byId.find(g.id);
        if (it == byId.end()) {
            out.primitives.push_back(g);
            continue;
        }
        const Vec3 &dir = it->second->direction;
        const double eps = split_step(g, dir, cfg);
        for (double sign : {1.0, -1.0}) {
            Gaussian child = g;
            child.id = nextId++;
            child.position = g.position + sign * eps * dir;
            child.opacity = g.opacity / 2.0;
            out.primitives.push_back(child);
        }
    }
    return out;
}

Scene
adc_densify(const Scene &scene, const SplitAccumulator &acc, const DensifyConfig &cfg, double positionStep,
            std::mt19937_64 &rng, AdcCounts *counts) {
    acc.checkMatches(scene);
    AdcCounts local;
    Scene out;
    out.mode = scene.mode;
    std::int64_t nextId = scene.nextId();
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool planar = scene.mode == SceneMode::Planar;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian &g = scene.primitives[i];
        const SplitStats &st = acc[i];
        const double meanNorm = st.viewSamples > 0 ? st.viewGradNorm / st.viewSamples : 0.0;
        if (!(meanNorm >= cfg.adc.gradThreshold) || st.viewSamples == 0) {
            out.primitives.push_back(g);
            continue;
        }
        ++local.candidates;
        const double spectral = planar ? std::pow(std::max(g.scale[0], g.scale[1]), 2) : std::pow(g.scale.maxCoeff(), 2);
        if (spectral <= cfg.adc.scaleThreshold) {
            ++local.clones;
            out.primitives.push_back(g);
            Gaussian copy = g;
            copy.id = nextId++;
            const Vec3 meanGrad = st.count > 0 ? Vec3(st.G / st.count) : Vec3::Zero();
            copy.position = g.position - positionStep * meanGrad;
            out.primitives.push_back(copy);
        } else {
            ++local.splits;
            const Mat3 M = g.rotationMatrix() * g.scale.asDiagonal();
            for (int j = 0; j < 2; ++j) {
                Vec3 z;
                z[0] = normal(rng);
                z[1] = normal(rng);
                z[2] = planar ? 0.0 : normal(rng);
                Gaussian child = g;
                child.id = nextId++;
                child.position = g.position + M * z;
                if (planar)
                    child.position[2] = g.position[2];
                child.scale = g.scale * cfg.adc.scaleFactor;
                out.primitives.push_back(child);
            }
        }
    }
    if (counts)
        *counts = local;
    return out;
}

Scene
prune(const Scene &scene, const DensifyConfig &cfg) {
    Scene out;
    out.mode = scene.mode;
    for (const auto &g : scene.primitives)
        if (!(g.opacity < cfg.pruneOpacity))
            out.primitives.push_back(g);
    return out;
}

namespace {

std::string
format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

} // namespace

std::string
DensifyEvent::logLine() const {
    return "step=" + std::to_string(step) + " policy=" + to_string(policy) + " candidates=" +
           std::to_string(candidates) + " split=" + std::to_string(splits) + " lambda_min=" +
           format_double(minLambda) + " lambda_median=" + format_double(medianLambda) +
           " points=" + std::to_string(pointsBefore) + "->" + std::to_string(pointsAfter);
}

std::string
DensifyEvent::csvCell() const {
    return to_string(policy) + ":cand=" + std::to_string(candidates) + ";split=" + std::to_string(splits) +
           ";lmin=" + format_double(minLambda) + ";lmed=" + format_double(medianLambda) +
           ";n=" + std::to_string(pointsBefore) + "->" + std::to_string(pointsAfter);
}

Scene
densify(const Scene &scene, const SplitAccumulator &acc, DensifyPolicy policy, const DensifyConfig &cfg,
        const DensifyContext &ctx, DensifyEvent &event) {
    acc.checkMatches(scene);
    event = DensifyEvent{};
    event.step = ctx.step;
    event.policy = policy;
    event.pointsBefore = scene.size();

    // lambda_min statistics are reported for every policy
    DensifyConfig decideCfg = cfg;
    if (policy == DensifyPolicy::Compactest && !cfg.epsGrad)
        throw InvalidArgument("compactest policy needs densify.eps_grad");
    if (policy != DensifyPolicy::Compactest && policy != DensifyPolicy::Sdc && policy != DensifyPolicy::SdcBudgeted) {
        decideCfg.epsGrad.reset();
        decideCfg.adcPrefilter = false;
    }
    std::vector<SplitDecision> decisions = sdc_decide(acc, decideCfg, scene.mode);
    std::vector<double> lambdas;
    for (const auto &d : decisions)
        lambdas.push_back(d.lambdaMin);
    if (!lambdas.empty()) {
        std::sort(lambdas.begin(), lambdas.end());
        event.minLambda = lambdas.front();
        const std::size_t n = lambdas.size();
        event.medianLambda = n % 2 ? lambdas[n / 2] : 0.5 * (lambdas[n / 2 - 1] + lambdas[n / 2]);
    }

    Scene out;
    switch (policy) {
    case DensifyPolicy::None:
        out = scene;
        break;
    case DensifyPolicy::Sdc:
    case DensifyPolicy::Compactest:
    case DensifyPolicy::SdcBudgeted: {
        for (const auto &d : decisions)
            event.candidates += d.verdict == Verdict::Split;
        if (policy == DensifyPolicy::SdcBudgeted && !cfg.budget)
            throw InvalidArgument("sdc-budgeted policy needs densify.budget");
        if (cfg.budget)
            decisions = select_budgeted(std::move(decisions), *cfg.budget);
        for (const auto &d : decisions)
            event.splits += d.verdict == Verdict::Split;
        out = sdc_apply(scene, decisions, cfg);
        break;
    }
    case DensifyPolicy::Adc: {
        if (!ctx.rng)
            throw InvalidArgument("adc densification needs a random generator");
        AdcCounts counts;
        out = adc_densify(scene, acc, cfg, ctx.positionStep, *ctx.rng, &counts);
        event.candidates = counts.candidates;
        event.splits = counts.clones + counts.splits;
        break;
    }
    }
    event.pointsAfter = out.size();
    return out;
}

} // namespace steepgs
