// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0
//
// Densification policies.
//
// Steepest density control accumulates, for every primitive i, the splitting
// matrix
//
//   S_i = E_x [ dL/dsigma_i(x) * d^2 sigma_i(x) / dp^2 ]
//
// and replaces i by two half-opacity offspring at p +- eps v_min(S_i) exactly
// when lambda_min(S_i) is below a small negative threshold. A split with
// zero-mean offsets delta_j and weights w_j changes the loss, to second
// order, by 1/2 sum_j w_j delta_j^T S_i delta_j; the +-v_min split attains
// the minimum lambda_min / 2 over all offsets of norm <= 1.
//
// The classic gradient-driven clone/split heuristic (ADC) is kept alongside
// as a baseline.

#pragma once

#include "steepgs/diff.hpp"
#include "steepgs/primitives.hpp"
#include "steepgs/renderer.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace steepgs {

enum class StepPolicy {
    /// offspring at p +- value * v
    Absolute,
    /// offspring at p +- value * sqrt(v^T Sigma v)
    Relative,
};

struct AdcConfig {
    /// Mean view-space gradient norm at or above which a primitive densifies.
    double gradThreshold = 2e-4;
    /// Spectral norm of Sigma separating clone (<=) from split (>).
    double scaleThreshold = 1e-3;
    double scaleFactor = 0.8;
};

struct DensifyConfig {
    double epsSplit = -1e-6;
    StepPolicy stepPolicy = StepPolicy::Relative;
    double stepValue = 0.5;
    /// Maximum number of splits per round.
    std::optional<int> budget;
    /// Split only when the averaged position gradient norm is at most this.
    std::optional<double> epsGrad;
    /// Also require the ADC view-space gradient test (adc.gradThreshold)
    /// before the eigen test may split.
    bool adcPrefilter = false;
    AdcConfig adc;
    double pruneOpacity = 0.005;
    int interval = 100;
    int warmup = 500;
    /// Last step at which densification may run; unset means half the run.
    std::optional<int> densifyUntil;

    void validate() const;
};

enum class DensifyPolicy { None, Sdc, Adc, SdcBudgeted, Compactest };

std::string to_string(DensifyPolicy policy);
DensifyPolicy parse_policy(const std::string &name);

/// Running sums for one primitive.
struct SplitStats {
    std::int64_t id = 0;
    /// Sum of splitting-matrix increments (symmetric).
    Mat3 S = Mat3::Zero();
    /// Sum of position gradients.
    Vec3 G = Vec3::Zero();
    /// Sum over views and steps of |dL/d(Pp + b)|.
    double viewGradNorm = 0.0;
    int viewSamples = 0;
    /// Accumulation steps.
    int count = 0;
};

class SplitAccumulator {
  public:
    SplitAccumulator() = default;
    explicit SplitAccumulator(const Scene &scene) { reset(scene); }

    /// Zero every sum and re-key to the scene's ids, in scene order.
    void reset(const Scene &scene);

    std::size_t
    size() const {
        return stats_.size();
    }

    const SplitStats &
    operator[](std::size_t i) const {
        return stats_[i];
    }

    SplitStats &
    operator[](std::size_t i) {
        return stats_[i];
    }

    const std::vector<SplitStats> &
    stats() const {
        return stats_;
    }

    /// Throws StaleState if the ids differ from the scene's, in order.
    void checkMatches(const Scene &scene) const;

  private:
    std::vector<SplitStats> stats_;
};

/// One rendered view of the current step.
struct ViewPass {
    const Camera &cam;
    const RenderTape &tape;
    const PerGaussianGrads &grads;
};

/// Adds every view's splitting-matrix increments, position gradients and
/// view-space gradient norms, then counts one step.
void accumulate_split_stats(SplitAccumulator &acc, std::span<const ViewPass> views, const Scene &scene);

void accumulate_split_stats(SplitAccumulator &acc, const PerGaussianGrads &grads, const RenderTape &tape,
                            const Scene &scene, const Camera &cam);

enum class Verdict { Keep, Split };

struct SplitDecision {
    std::int64_t id = 0;
    Verdict verdict = Verdict::Keep;
    /// Unit split direction in position space.
    Vec3 direction = Vec3::Zero();
    double lambdaMin = 0.0;
    /// lambda_min / 2, the predicted second-order loss change per unit step^2.
    double predictedRate = 0.0;
};

/// Eigen test on each averaged splitting matrix. Planar scenes test the
/// in-plane 2x2 block.
std::vector<SplitDecision> sdc_decide(const SplitAccumulator &acc, const DensifyConfig &cfg,
                                      SceneMode mode = SceneMode::Affine3D);

/// Keeps the `budget` most negative split verdicts (ties by ascending id).
std::vector<SplitDecision> select_budgeted(std::vector<SplitDecision> decisions, int budget);

/// Replaces every split primitive, in place, by its (+) then (-) offspring.
Scene sdc_apply(const Scene &scene, std::span<const SplitDecision> decisions, const DensifyConfig &cfg);

/// Offspring displacement length for a parent under the configured policy.
double split_step(const Gaussian &parent, const Vec3 &direction, const DensifyConfig &cfg);

struct AdcCounts {
    int candidates = 0;
    int clones = 0;
    int splits = 0;
};

/// Gradient-driven clone/split. Split offspring positions draw from
/// N(p, Sigma) in scene order, two offspring per parent, using `rng`.
Scene adc_densify(const Scene &scene, const SplitAccumulator &acc, const DensifyConfig &cfg, double positionStep,
                  std::mt19937_64 &rng, AdcCounts *counts = nullptr);

/// Removes primitives with opacity below cfg.pruneOpacity.
Scene prune(const Scene &scene, const DensifyConfig &cfg);

/// 1/2 sum_j w_j delta_j^T S delta_j. Throws InvalidArgument unless the
/// weights are positive, sum to 1 and give the offsets zero weighted mean.
template <typename Scalar, int Dim>
Scalar
eval_split_characteristic(std::span<const Eigen::Matrix<Scalar, Dim, 1>> deltas, std::span<const Scalar> weights,
                          const Eigen::Matrix<Scalar, Dim, Dim> &S) {
    if (deltas.size() != weights.size() || deltas.empty())
        throw InvalidArgument("split characteristic: need one weight per offset");
    Scalar total = 0;
    Eigen::Matrix<Scalar, Dim, 1> mean = Eigen::Matrix<Scalar, Dim, 1>::Zero();
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        if (!(weights[j] > Scalar(0)))
            throw InvalidArgument("split characteristic: weights must be positive");
        total += weights[j];
        mean += weights[j] * deltas[j];
    }
    using std::abs;
    if (abs(total - Scalar(1)) > Scalar(1e-9))
        throw InvalidArgument("split characteristic: weights must sum to 1");
    if (mean.cwiseAbs().maxCoeff() > Scalar(1e-9))
        throw InvalidArgument("split characteristic: offsets must have zero weighted mean");
    Scalar value = 0;
    for (std::size_t j = 0; j < deltas.size(); ++j)
        value += weights[j] * deltas[j].dot(S * deltas[j]);
    return value / Scalar(2);
}

/// One densification round's summary for the metrics stream.
struct DensifyEvent {
    int step = 0;
    DensifyPolicy policy = DensifyPolicy::None;
    int candidates = 0;
    int splits = 0;
    double minLambda = 0.0;
    double medianLambda = 0.0;
    std::size_t pointsBefore = 0;
    std::size_t pointsAfter = 0;

    /// "step=.. policy=.. candidates=.. split=.. lambda_min=.. lambda_median=.."
    std::string logLine() const;
    /// Comma-free compact form for CSV cells.
    std::string csvCell() const;
};

struct DensifyContext {
    int step = 0;
    double positionStep = 0.0;
    std::mt19937_64 *rng = nullptr;
};

/// Runs the policy's densification (not pruning) and reports the event.
Scene densify(const Scene &scene, const SplitAccumulator &acc, DensifyPolicy policy, const DensifyConfig &cfg,
              const DensifyContext &ctx, DensifyEvent &event);

} // namespace steepgs
