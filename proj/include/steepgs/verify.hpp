// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force oracles and the property harness behind `steepgs verify`.
//
// The oracles (finite differences, the charpoly bisection, the exact
// post-split loss) only call into primitives and the renderer, never into
// the analytic derivative or densification code they check.

#pragma once

#include "steepgs/diff.hpp"
#include "steepgs/primitives.hpp"
#include "steepgs/renderer.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace steepgs {

/// How a scene is turned into a scalar loss over a set of views.
struct LossSetup {
    RenderMode mode = RenderMode::Additive;
    LossKind loss = LossKind::L2;
    double sigmaCutoff = 0.0;
};

/// Mean over views of loss(render(scene, view.cam), view.target).
double scene_loss(const Scene &scene, std::span<const View> views, const LossSetup &setup);

/// Perturbation length for a parameter of magnitude |value|.
inline double
fd_step(double h, double value) {
    return h * std::max(std::abs(value), 1.0);
}

/// Central differences of `loss` in every scalar parameter (position, scale,
/// the four raw quaternion components, opacity, color). Depth keys and the
/// view-space gradient are not differentiated.
PerGaussianGrads fd_gradient(const Scene &scene, const std::function<double(const Scene &)> &loss, double h);

PerGaussianGrads fd_gradient(const Scene &scene, std::span<const View> views, const LossSetup &setup, double h);

/// Central second differences of eval_projected_sigma in the position, symmetrized.
Mat3 fd_position_hessian(const Gaussian &prim, const Camera &cam, const Vec2 &x, double h);

/// Offspring of one primitive at theta + scale * (meanShift + offsets[j]) with
/// opacity weights[j] * o.
struct SplitSpec {
    std::int64_t target = 0;
    std::vector<double> weights;
    std::vector<Vec3> offsets;
    Vec3 meanShift = Vec3::Zero();
    double scale = 0.0;

    /// Weights positive summing to 1, offsets of norm <= 1 with zero weighted mean.
    void validate() const;

    /// Two half-weight offspring at +-direction, no mean shift.
    static SplitSpec steepest(std::int64_t target, const Vec3 &direction, double scale);
};

/// Materializes the split scene. The offspring replace the target in place.
Scene expand_split(const Scene &scene, const SplitSpec &spec);

/// Exact loss of the split scene rendered additively (no Taylor expansion).
double brute_force_split_loss(const Scene &scene, const SplitSpec &spec, std::span<const View> views,
                              LossKind loss = LossKind::L1);

struct SplitExpansionTerms {
    double splitLoss = 0.0;
    double baseLoss = 0.0;
    double gradientTerm = 0.0;
    double curvatureTerm = 0.0;
    double splittingTerm = 0.0;
    double residual = 0.0;
};

/// |L(split) - [L + g^T(eps mu) + 1/2 (eps mu)^T H (eps mu) + Delta(eps delta, w, S)]|
/// on an additive render with a smooth loss. H is the position block of the
/// loss Hessian, from central differences of the analytic gradient.
SplitExpansionTerms split_expansion_residual(const Scene &scene, const SplitSpec &spec, std::span<const View> views, double eps,
                                LossKind loss = LossKind::L2);

/// Eigenvalues of a symmetric 3x3 matrix by bisection on det(lambda I - A),
/// ascending. Independent of the closed-form solver.
std::array<double, 3> charpoly_bisection_eigenvalues(const Mat3 &A);

// ---------------------------------------------------------------------------
// property harness

struct CheckResult {
    std::string name;
    bool passed = false;
    /// The worst observed value of the checked quantity.
    double measured = 0.0;
    double tolerance = 0.0;
    double seconds = 0.0;
    double timeLimit = 0.0;
    std::string detail;
};

struct CheckInfo {
    std::string name;
    std::string description;
    std::function<CheckResult()> run;
};

/// Every property check, in a fixed order.
const std::vector<CheckInfo> &all_checks();

CheckResult check_hessian_exactness(int configs = 100);
CheckResult check_gradient_exactness(int scenes = 100);
CheckResult check_eigensolver(int matrices = 1000);
CheckResult check_split_expansion_cubic(int fixtures = 20);
CheckResult check_steepest_split_optimality(int fixtures = 50);
CheckResult check_psd_no_gain(int fixtures = 50);
CheckResult check_saddle_escape();

/// The constructed saddle: one isotropic primitive whose target carries a
/// zero-gradient quadrupole, plus its single view.
struct SaddleFixture {
    Scene scene;
    std::vector<View> views;
};
SaddleFixture make_saddle_fixture();

/// One line per check: PASS/FAIL, name, measured vs tolerance, runtime.
std::string format_check(const CheckResult &r);

} // namespace steepgs
