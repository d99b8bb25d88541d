// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/verify.hpp"

#include "steepgs/density.hpp"
#include "steepgs/eigsym.hpp"
#include "steepgs/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace steepgs {

double
scene_loss(const Scene &scene, std::span<const View> views, const LossSetup &setup) {
    if (views.empty())
        throw InvalidArgument("scene_loss: need at least one view");
    double total = 0.0;
    for (const View &v : views) {
        const RenderResult r = render(scene, v.cam, RenderOptions{setup.mode, setup.sigmaCutoff});
        total += loss_value(setup.loss, r.image, v.target);
    }
    return total / static_cast<double>(views.size());
}

PerGaussianGrads
fd_gradient(const Scene &scene, const std::function<double(const Scene &)> &loss, double h) {
    if (!(h > 0.0))
        throw InvalidArgument("fd_gradient: step must be > 0");
    PerGaussianGrads out;
    out.grads.resize(scene.size());
    Scene work = scene;
    auto central = [&](double &param) {
        const double saved = param;
        const double step = fd_step(h, saved);
        param = saved + step;
        const double up = loss(work);
        param = saved - step;
        const double down = loss(work);
        param = saved;
        return (up - down) / (2.0 * step);
    };
    for (std::size_t i = 0; i < scene.size(); ++i) {
        Gaussian &g = work.primitives[i];
        GaussianGrad &d = out.grads[i];
        for (int k = 0; k < 3; ++k) {
            d.position[k] = central(g.position[k]);
            d.scale[k] = central(g.scale[k]);
            d.color[k] = central(g.color[k]);
        }
        for (int k = 0; k < 4; ++k)
            d.rotation[k] = central(g.rotation[k]);
        d.opacity = central(g.opacity);
    }
    return out;
}

PerGaussianGrads
fd_gradient(const Scene &scene, std::span<const View> views, const LossSetup &setup, double h) {
    return fd_gradient(scene, [&](const Scene &s) { return scene_loss(s, views, setup); }, h);
}

Mat3
fd_position_hessian(const Gaussian &prim, const Camera &cam, const Vec2 &x, double h) {
    if (!(h > 0.0))
        throw InvalidArgument("fd_position_hessian: step must be > 0");
    Gaussian g = prim;
    auto at = [&](const Vec3 &offset) {
        g.position = prim.position + offset;
        return eval_projected_sigma(x, g, cam);
    };
    Vec3 steps;
    for (int k = 0; k < 3; ++k)
        steps[k] = fd_step(h, prim.position[k]);
    const double f0 = at(Vec3::Zero());
    Mat3 H;
    for (int i = 0; i < 3; ++i) {
        const Vec3 ei = Vec3::Unit(i) * steps[i];
        H(i, i) = (at(ei) - 2.0 * f0 + at(-ei)) / (steps[i] * steps[i]);
        for (int j = i + 1; j < 3; ++j) {
            const Vec3 ej = Vec3::Unit(j) * steps[j];
            H(i, j) = (at(ei + ej) - at(ei - ej) - at(ej - ei) + at(-ei - ej)) / (4.0 * steps[i] * steps[j]);
            H(j, i) = H(i, j);
        }
    }
    return H;
}

void
SplitSpec::validate() const {
    if (weights.empty() || weights.size() != offsets.size())
        throw InvalidArgument("split spec: need one weight per offset and at least one offspring");
    if (!(scale >= 0.0) || !std::isfinite(scale) || !meanShift.allFinite())
        throw InvalidArgument("split spec: scale must be finite and >= 0");
    double total = 0.0;
    Vec3 mean = Vec3::Zero();
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (!(weights[j] > 0.0))
            throw InvalidArgument("split spec: weights must be positive");
        if (!(offsets[j].norm() <= 1.0 + 1e-12))
            throw InvalidArgument("split spec: offsets must have norm <= 1");
        total += weights[j];
        mean += weights[j] * offsets[j];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw InvalidArgument("split spec: weights must sum to 1");
    if (mean.cwiseAbs().maxCoeff() > 1e-9)
        throw InvalidArgument("split spec: offsets must have zero weighted mean");
}

SplitSpec
SplitSpec::steepest(std::int64_t target, const Vec3 &direction, double scale) {
    SplitSpec s;
    s.target = target;
    const Vec3 v = direction.normalized();
    s.weights = {0.5, 0.5};
    s.offsets = {v, -v};
    s.scale = scale;
    return s;
}

Scene
expand_split(const Scene &scene, const SplitSpec &spec) {
    spec.validate();
    Scene out;
    out.mode = scene.mode;
    std::int64_t fresh = scene.nextId();
    bool found = false;
    for (const Gaussian &g : scene.primitives) {
        if (g.id != spec.target) {
            out.primitives.push_back(g);
            continue;
        }
        found = true;
        for (std::size_t j = 0; j < spec.weights.size(); ++j) {
            Gaussian child = g;
            child.id = fresh++;
            child.position = g.position + spec.scale * (spec.meanShift + spec.offsets[j]);
            child.opacity = spec.weights[j] * g.opacity;
            out.primitives.push_back(child);
        }
    }
    if (!found)
        throw InvalidArgument("split spec: no primitive with id " + std::to_string(spec.target));
    return out;
}

double
brute_force_split_loss(const Scene &scene, const SplitSpec &spec, std::span<const View> views, LossKind loss) {
    return scene_loss(expand_split(scene, spec), views, LossSetup{RenderMode::Additive, loss, 0.0});
}

namespace {

std::size_t
index_of(const Scene &scene, std::int64_t id) {
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (scene.primitives[i].id == id)
            return i;
    throw InvalidArgument("no primitive with id " + std::to_string(id));
}

/// One full-batch additive pass: summed gradients plus one step of split statistics.
struct StepStats {
    std::vector<GaussianGrad> grads;
    SplitAccumulator acc;
};

StepStats
step_stats(const Scene &scene, std::span<const View> views, LossKind loss) {
    const double weight = 1.0 / static_cast<double>(views.size());
    std::vector<RenderResult> renders;
    std::vector<PerGaussianGrads> grads;
    renders.reserve(views.size());
    grads.reserve(views.size());
    for (const View &v : views) {
        renders.push_back(render(scene, v.cam, RenderOptions{RenderMode::Additive, 0.0}));
        grads.push_back(backprop(scene, v.cam, v.target, renders.back().tape, loss, weight));
    }
    StepStats out;
    out.acc.reset(scene);
    std::vector<ViewPass> passes;
    for (std::size_t k = 0; k < views.size(); ++k)
        passes.push_back(ViewPass{views[k].cam, renders[k].tape, grads[k]});
    accumulate_split_stats(out.acc, passes, scene);
    out.grads.assign(scene.size(), GaussianGrad{});
    for (const auto &g : grads)
        for (std::size_t i = 0; i < scene.size(); ++i)
            out.grads[i] += g.grads[i];
    return out;
}

Mat3
mean_split_matrix(const SplitStats &s) {
    return s.count > 0 ? Mat3(s.S / static_cast<double>(s.count)) : Mat3::Zero();
}

} // namespace

SplitExpansionTerms
split_expansion_residual(const Scene &scene, const SplitSpec &spec, std::span<const View> views, double eps,
                  LossKind loss) {
    if (loss == LossKind::L1)
        throw InvalidArgument("split_expansion_residual: needs a smooth loss, l1 is not twice differentiable");
    spec.validate();
    if (!(eps >= 0.0))
        throw InvalidArgument("split_expansion_residual: eps must be >= 0");
    const LossSetup setup{RenderMode::Additive, loss, 0.0};
    const std::size_t idx = index_of(scene, spec.target);

    SplitSpec scaled = spec;
    scaled.scale = eps;
    SplitExpansionTerms t;
    t.baseLoss = scene_loss(scene, views, setup);
    t.splitLoss = scene_loss(expand_split(scene, scaled), views, setup);

    const StepStats base = step_stats(scene, views, loss);
    const Vec3 g = base.grads[idx].position;
    const Mat3 S = mean_split_matrix(base.acc[idx]);

    Mat3 H;
    Scene work = scene;
    Vec3 &p = work.primitives[idx].position;
    const Vec3 p0 = p;
    for (int j = 0; j < 3; ++j) {
        const double h = fd_step(1e-5, p0[j]);
        p = p0 + h * Vec3::Unit(j);
        const Vec3 up = step_stats(work, views, loss).grads[idx].position;
        p = p0 - h * Vec3::Unit(j);
        const Vec3 down = step_stats(work, views, loss).grads[idx].position;
        H.col(j) = (up - down) / (2.0 * h);
    }
    p = p0;
    H = 0.5 * (H + H.transpose()).eval();

    const Vec3 shift = eps * spec.meanShift;
    std::vector<Vec3> deltas;
    for (const Vec3 &d : spec.offsets)
        deltas.push_back(eps * d);
    t.gradientTerm = g.dot(shift);
    t.curvatureTerm = 0.5 * shift.dot(H * shift);
    t.splittingTerm = eval_split_characteristic<double, 3>(deltas, spec.weights, S);
    t.residual = std::abs(t.splitLoss - (t.baseLoss + t.gradientTerm + t.curvatureTerm + t.splittingTerm));
    return t;
}

std::array<double, 3>
charpoly_bisection_eigenvalues(const Mat3 &A) {
    // det(l I - A) = l^3 + c2 l^2 + c1 l + c0, evaluated directly by cofactors
    auto charpoly = [&](double l) {
        const double a = l - A(0, 0), e = l - A(1, 1), i = l - A(2, 2);
        const double b = -A(0, 1), c = -A(0, 2), d = -A(1, 0), f = -A(1, 2), g = -A(2, 0), h = -A(2, 1);
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
    };
    const double c2 = -(A(0, 0) + A(1, 1) + A(2, 2));
    const double c1 = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0) + A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0) +
                      A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
    const double disc = std::max(0.0, c2 * c2 - 3.0 * c1);
    const double lo = (-c2 - std::sqrt(disc)) / 3.0;
    const double hi = (-c2 + std::sqrt(disc)) / 3.0;
    double bound = 0.0;
    for (int r = 0; r < 3; ++r)
        bound = std::max(bound, A.row(r).cwiseAbs().sum());
    bound += 1.0;

    // root of charpoly in [a, b] where the sign goes from `signA` to its opposite
    auto bisect = [&](double a, double b, bool risingAtRoot) {
        const double fa = charpoly(a), fb = charpoly(b);
        if (risingAtRoot ? fa >= 0.0 : fa <= 0.0)
            return a;
        if (risingAtRoot ? fb <= 0.0 : fb >= 0.0)
            return b;
        for (int it = 0; it < 400; ++it) {
            const double m = 0.5 * (a + b);
            if (m <= a || m >= b)
                break;
            const double fm = charpoly(m);
            if ((fm < 0.0) == risingAtRoot)
                a = m;
            else
                b = m;
        }
        return 0.5 * (a + b);
    };
    std::array<double, 3> roots{bisect(-bound, lo, true), bisect(lo, hi, false), bisect(hi, bound, true)};
    std::sort(roots.begin(), roots.end());
    return roots;
}

// ---------------------------------------------------------------------------
// property harness

namespace {

using Clock = std::chrono::steady_clock;

double
seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Vec4
random_quaternion(std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec4 q(n(rng), n(rng), n(rng), n(rng));
    return q / q.norm();
}

double
uniform(std::mt19937_64 &rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

/// Well-conditioned random affine camera: P = [I | 0] plus a bounded perturbation.
Camera
random_camera(std::mt19937_64 &rng, int width, int height, double pixelScale) {
    Camera cam = Camera::planar(width, height, pixelScale);
    for (;;) {
        Mat23 P;
        P << 1, 0, 0, 0, 1, 0;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c)
                P(r, c) += uniform(rng, -0.6, 0.6);
        const Mat2 PPt = P * P.transpose();
        if (PPt(0, 0) * PPt(1, 1) - PPt(0, 1) * PPt(1, 0) > 0.25) {
            cam.P = P;
            break;
        }
    }
    return cam;
}

/// Places a primitive so that its image-space mean lands on `target`.
void
place(Gaussian &g, const Camera &cam, SceneMode mode, const Vec2 &target, double depthOffset) {
    if (mode == SceneMode::Planar) {
        g.position = Vec3(target[0], target[1], 0.0);
        return;
    }
    const Eigen::Matrix<double, 3, 2> pinv = cam.P.transpose() * inverse_2x2<double>(cam.P * cam.P.transpose());
    // any preimage works; move along the camera's null direction for variety
    const Vec3 null = cam.P.row(0).transpose().cross(cam.P.row(1).transpose()).normalized();
    g.position = pinv * (target - cam.b) + depthOffset * null;
}

Scene
random_scene(std::mt19937_64 &rng, const Camera &cam, SceneMode mode, int count, double sMin, double sMax,
             double oMin, double oMax) {
    Scene scene;
    scene.mode = mode;
    const double w = cam.width * cam.pixelScale, h = cam.height * cam.pixelScale;
    for (int i = 0; i < count; ++i) {
        Gaussian g;
        g.id = i;
        place(g, cam, mode, Vec2(uniform(rng, 0.2 * w, 0.8 * w), uniform(rng, 0.2 * h, 0.8 * h)),
              uniform(rng, -0.5, 0.5) * w);
        for (int k = 0; k < 3; ++k) {
            g.scale[k] = uniform(rng, sMin, sMax);
            g.color[k] = uniform(rng, 0.1, 0.9);
        }
        g.rotation = mode == SceneMode::Planar ? planar_rotation(uniform(rng, 0.0, std::numbers::pi))
                                               : random_quaternion(rng);
        g.opacity = uniform(rng, oMin, oMax);
        g.depth = uniform(rng, 0.0, 1.0);
        scene.primitives.push_back(g);
    }
    return scene;
}

/// Random admissible in-plane split: m in {2, 3, 4}, positive weights,
/// zero weighted mean, largest offset norm in (0, 1].
void
sample_split(std::mt19937_64 &rng, std::vector<double> &weights, std::vector<Vec3> &offsets) {
    std::normal_distribution<double> n(0.0, 1.0);
    const int m = std::uniform_int_distribution<int>(2, 4)(rng);
    weights.resize(m);
    offsets.resize(m);
    double total = 0.0;
    for (double &w : weights) {
        w = uniform(rng, 0.05, 1.0);
        total += w;
    }
    Vec3 mean = Vec3::Zero();
    for (int j = 0; j < m; ++j) {
        weights[j] /= total;
        offsets[j] = Vec3(n(rng), n(rng), 0.0);
        mean += weights[j] * offsets[j];
    }
    double longest = 0.0;
    for (Vec3 &d : offsets) {
        d -= mean;
        longest = std::max(longest, d.norm());
    }
    const double radius = uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : uniform(rng, 0.05, 1.0);
    for (Vec3 &d : offsets)
        d *= radius / longest;
}

CheckResult
finish(CheckResult r, Clock::time_point start, bool property) {
    r.seconds = seconds_since(start);
    r.passed = property && r.seconds < r.timeLimit;
    if (property && !r.passed)
        r.detail += (r.detail.empty() ? "" : "; ") + std::string("time limit exceeded");
    return r;
}

std::string
fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

/// Planar 32x32 view of the square [0, 4]^2.
Camera
fixture_camera() {
    return Camera::planar(32, 32, 0.125);
}

} // namespace

CheckResult
check_hessian_exactness(int configs) {
    const auto start = Clock::now();
    CheckResult r{"hessian", false, 0.0, 1e-5, 0.0, 2.0, ""};
    std::mt19937_64 rng(0x4e55u);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < configs; ++k) {
        const Camera cam = random_camera(rng, 8, 8, 0.25);
        Gaussian g;
        g.position = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        g.scale = Vec3(uniform(rng, 0.3, 1.0), uniform(rng, 0.3, 1.0), uniform(rng, 0.3, 1.0));
        g.rotation = random_quaternion(rng);
        g.opacity = uniform(rng, 0.2, 1.0);
        const ProjectedGaussian pg = project_gaussian(g, cam);
        // pixel within two standard deviations of the projected mean
        Mat2 L = Mat2::Zero();
        L(0, 0) = std::sqrt(pg.cov(0, 0));
        L(1, 0) = pg.cov(1, 0) / L(0, 0);
        L(1, 1) = std::sqrt(pg.cov(1, 1) - L(1, 0) * L(1, 0));
        Vec2 z(n(rng), n(rng));
        if (z.norm() > 2.0)
            z *= 2.0 / z.norm();
        const Vec2 x = pg.mean + L * z;
        const Mat3 analytic = position_hessian(g, cam, x);
        const Mat3 oracle = fd_position_hessian(g, cam, x, 1e-4);
        const double err = (analytic - oracle).norm() / std::max(oracle.norm(), 1e-300);
        r.measured = std::max(r.measured, err);
    }
    r.detail = std::to_string(configs) + " configurations, worst relative Frobenius error";
    return finish(r, start, r.measured < r.tolerance);
}

CheckResult
check_gradient_exactness(int scenes) {
    const auto start = Clock::now();
    CheckResult r{"gradient", false, 0.0, 1e-4, 0.0, 30.0, ""};
    std::mt19937_64 rng(0x6a4du);
    const char *groups[] = {"position", "scale", "rotation", "opacity", "color"};
    std::string worstGroup;
    for (int k = 0; k < scenes; ++k) {
        const SceneMode mode = k % 2 == 0 ? SceneMode::Planar : SceneMode::Affine3D;
        const RenderMode rmode = (k / 2) % 2 == 0 ? RenderMode::Composited : RenderMode::Additive;
        const Camera cam = mode == SceneMode::Planar ? Camera::planar(16, 16, 1.0 / 16.0)
                                                      : random_camera(rng, 16, 16, 1.0 / 16.0);
        const Scene scene = random_scene(rng, cam, mode, 4, 0.08, 0.25, 0.2, 0.9);
        const LossSetup setup{rmode, LossKind::L1, 0.0};
        const RenderResult base = render(scene, cam, RenderOptions{rmode, 0.0});
        // residuals bounded away from zero keep l1 differentiable under the probes
        View view{cam, base.image};
        for (Eigen::Index i = 0; i < view.target.pixels.size(); ++i) {
            const double off = uniform(rng, 0.05, 0.3);
            view.target.pixels.data()[i] += uniform(rng, 0.0, 1.0) < 0.5 ? -off : off;
        }
        const PerGaussianGrads analytic = backprop(scene, cam, view.target, base.tape, LossKind::L1);
        const PerGaussianGrads oracle = fd_gradient(scene, std::span<const View>(&view, 1), setup, 1e-5);
        for (int grp = 0; grp < 5; ++grp) {
            double diff2 = 0.0, ref2 = 0.0;
            for (std::size_t i = 0; i < scene.size(); ++i) {
                const GaussianGrad &a = analytic.grads[i], &f = oracle.grads[i];
                Eigen::VectorXd va, vf;
                switch (grp) {
                case 0: va = a.position; vf = f.position; break;
                case 1: va = a.scale; vf = f.scale; break;
                case 2: va = a.rotation; vf = f.rotation; break;
                case 3: va = Eigen::VectorXd::Constant(1, a.opacity); vf = Eigen::VectorXd::Constant(1, f.opacity); break;
                default: va = a.color; vf = f.color; break;
                }
                diff2 += (va - vf).squaredNorm();
                ref2 += vf.squaredNorm();
            }
            const double err = std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-9);
            if (err > r.measured) {
                r.measured = err;
                worstGroup = groups[grp];
            }
        }
    }
    r.detail = std::to_string(scenes) + " scenes, worst group relative error (" + worstGroup + ")";
    return finish(r, start, r.measured < r.tolerance);
}

CheckResult
check_eigensolver(int matrices) {
    const auto start = Clock::now();
    CheckResult r{"eigensolver", false, 0.0, 1.0, 0.0, 1.0, ""};
    std::mt19937_64 rng(0xe16u);
    double worstResidual = 0.0, worstValue = 0.0, worstTrace = 0.0, worstDet = 0.0, worstOrtho = 0.0;
    for (int k = 0; k < matrices; ++k) {
        Mat3 A;
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
                A(i, j) = A(j, i) = uniform(rng, -1.0, 1.0);
        const double fro = A.norm();
        const auto pairs = eig_sym3(A);
        const auto oracle = charpoly_bisection_eigenvalues(A);
        double sum = 0.0, prod = 1.0;
        for (int i = 0; i < 3; ++i) {
            const auto &[lambda, v] = pairs[i];
            worstResidual = std::max(worstResidual, (A * v - lambda * v).norm() / (1e-8 * (1.0 + fro)));
            worstValue = std::max(worstValue, std::abs(lambda - oracle[i]) / 1e-9);
            sum += lambda;
            prod *= lambda;
            for (int j = i + 1; j < 3; ++j)
                worstOrtho = std::max(worstOrtho, std::abs(v.dot(pairs[j].vector)) / 1e-8);
        }
        const double det = A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) -
                           A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
                           A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
        worstTrace = std::max(worstTrace, std::abs(sum - A.trace()) / (1e-9 * (1.0 + fro)));
        worstDet = std::max(worstDet, std::abs(prod - det) / (1e-9 * std::pow(1.0 + fro, 3)));
    }
    // every quantity is reported as a multiple of its own tolerance
    r.measured = std::max({worstResidual, worstValue, worstTrace, worstDet, worstOrtho});
    r.detail = "worst/tolerance: residual " + fmt(worstResidual) + ", eigenvalue " + fmt(worstValue) + ", trace " +
               fmt(worstTrace) + ", det " + fmt(worstDet) + ", orthogonality " + fmt(worstOrtho);
    return finish(r, start, r.measured < r.tolerance);
}

CheckResult
check_split_expansion_cubic(int fixtures) {
    const auto start = Clock::now();
    const int needed = fixtures - fixtures / 10;
    CheckResult r{"expansion", false, 0.0, static_cast<double>(needed), 0.0, 60.0, ""};
    std::mt19937_64 rng(0x7131u);
    std::normal_distribution<double> n(0.0, 1.0);
    const double eps[] = {0.1, 0.05, 0.025};
    int passing = 0;
    double lowest = std::numeric_limits<double>::infinity(), highest = 0.0;
    for (int k = 0; k < fixtures; ++k) {
        const Camera cam = fixture_camera();
        const Scene scene = random_scene(rng, cam, SceneMode::Planar, 5, 0.3, 0.8, 0.2, 0.9);
        const Scene other = random_scene(rng, cam, SceneMode::Planar, 5, 0.3, 0.8, 0.2, 0.9);
        const std::vector<View> views{View{cam, render(other, cam, RenderOptions{RenderMode::Additive, 0.0}).image}};
        SplitSpec spec;
        spec.target = scene.primitives[std::uniform_int_distribution<int>(0, 4)(rng)].id;
        sample_split(rng, spec.weights, spec.offsets);
        spec.meanShift = Vec3(n(rng), n(rng), 0.0);
        spec.meanShift *= uniform(rng, 0.0, 1.0) / spec.meanShift.norm();
        double res[3];
        for (int e = 0; e < 3; ++e)
            res[e] = split_expansion_residual(scene, spec, views, eps[e]).residual;
        bool ok = true;
        for (int e = 0; e < 2; ++e) {
            const double ratio = res[e + 1] / res[e];
            lowest = std::min(lowest, ratio);
            highest = std::max(highest, ratio);
            ok = ok && ratio >= 1.0 / 16.0 && ratio <= 0.5;
        }
        passing += ok ? 1 : 0;
    }
    r.measured = passing;
    r.detail = std::to_string(passing) + "/" + std::to_string(fixtures) + " fixtures with both halving ratios in " +
               "[1/16, 1/2] (need " + std::to_string(needed) + "); observed ratios " + fmt(lowest) + " .. " +
               fmt(highest);
    return finish(r, start, passing >= needed);
}

namespace {

/// Seeded planar fixture with its most negative splitting-matrix primitive.
struct SplitFixture {
    Scene scene;
    std::vector<View> views;
    SplitDecision decision;
    Mat3 S;
};

/// Draws fixtures until one has lambda_min of the requested sign.
SplitFixture
draw_split_fixture(std::mt19937_64 &rng, bool wantNegative) {
    const Camera cam = fixture_camera();
    DensifyConfig cfg;
    for (;;) {
        SplitFixture f;
        if (wantNegative) {
            f.scene = random_scene(rng, cam, SceneMode::Planar, 3, 0.3, 0.8, 0.2, 0.9);
            const Scene other = random_scene(rng, cam, SceneMode::Planar, 3, 0.3, 0.8, 0.2, 0.9);
            f.views = {View{cam, render(other, cam, RenderOptions{RenderMode::Additive, 0.0}).image}};
        } else {
            // a single primitive fitting a narrower, brighter copy of itself
            f.scene = random_scene(rng, cam, SceneMode::Planar, 1, 0.3, 0.6, 0.2, 0.6);
            Scene target = f.scene;
            Gaussian &t = target.primitives[0];
            t.scale *= uniform(rng, 0.5, 0.9);
            t.opacity = std::min(1.0, t.opacity * uniform(rng, 1.2, 1.6));
            f.views = {View{cam, render(target, cam, RenderOptions{RenderMode::Additive, 0.0}).image}};
        }
        const StepStats stats = step_stats(f.scene, f.views, LossKind::L2);
        const auto decisions = sdc_decide(stats.acc, cfg, SceneMode::Planar);
        std::size_t best = 0;
        for (std::size_t i = 1; i < decisions.size(); ++i)
            if (decisions[i].lambdaMin < decisions[best].lambdaMin)
                best = i;
        f.decision = decisions[best];
        f.S = mean_split_matrix(stats.acc[best]);
        if ((f.decision.lambdaMin < 0.0) == wantNegative)
            return f;
    }
}

double
characteristic(const std::vector<Vec3> &offsets, const std::vector<double> &weights, const Mat3 &S) {
    return eval_split_characteristic<double, 3>(offsets, weights, S);
}

} // namespace

CheckResult
check_steepest_split_optimality(int fixtures) {
    const auto start = Clock::now();
    CheckResult r{"steepest-split", false, 0.0, 1e-9, 0.0, 60.0, ""};
    std::mt19937_64 rng(0x7132u);
    const double eps = 0.05;
    double charViolation = -std::numeric_limits<double>::infinity();
    double bruteViolation = -std::numeric_limits<double>::infinity();
    std::vector<double> weights;
    std::vector<Vec3> offsets;
    for (int k = 0; k < fixtures; ++k) {
        const SplitFixture f = draw_split_fixture(rng, true);
        const SplitSpec sdc = SplitSpec::steepest(f.decision.id, f.decision.direction, eps);
        const double charSdc = characteristic(sdc.offsets, sdc.weights, f.S);
        for (int s = 0; s < 10000; ++s) {
            sample_split(rng, weights, offsets);
            charViolation = std::max(charViolation, charSdc - characteristic(offsets, weights, f.S));
        }
        const double bruteSdc = brute_force_split_loss(f.scene, sdc, f.views, LossKind::L2);
        for (int s = 0; s < 100; ++s) {
            SplitSpec other;
            other.target = sdc.target;
            other.scale = eps;
            sample_split(rng, other.weights, other.offsets);
            bruteViolation =
                std::max(bruteViolation, bruteSdc - brute_force_split_loss(f.scene, other, f.views, LossKind::L2));
        }
    }
    r.measured = bruteViolation;
    const bool ok = charViolation <= 1e-12 && bruteViolation <= 1e-9;
    r.detail = "max characteristic excess " + fmt(charViolation) + " (tolerance 1e-12), max split-loss excess " +
               fmt(bruteViolation) + " (tolerance 1e-9)";
    return finish(r, start, ok);
}

CheckResult
check_psd_no_gain(int fixtures) {
    const auto start = Clock::now();
    CheckResult r{"psd-no-gain", false, 0.0, 1e-12, 0.0, 30.0, ""};
    std::mt19937_64 rng(0x75dau);
    double lowest = std::numeric_limits<double>::infinity();
    int kept = 0;
    std::vector<double> weights;
    std::vector<Vec3> offsets;
    for (int k = 0; k < fixtures; ++k) {
        const SplitFixture f = draw_split_fixture(rng, false);
        kept += f.decision.verdict == Verdict::Keep ? 1 : 0;
        for (int s = 0; s < 10000; ++s) {
            sample_split(rng, weights, offsets);
            lowest = std::min(lowest, characteristic(offsets, weights, f.S));
        }
    }
    r.measured = -lowest;
    r.detail = std::to_string(kept) + "/" + std::to_string(fixtures) + " kept, lowest sampled characteristic " +
               fmt(lowest);
    return finish(r, start, kept == fixtures && lowest >= -1e-12);
}

SaddleFixture
make_saddle_fixture() {
    const Camera cam = Camera::planar(32, 32, 1.0 / 32.0);
    const double s = 0.1, eta = 0.2;
    SaddleFixture f;
    Gaussian g;
    g.id = 0;
    g.position = Vec3(0.5, 0.5, 0.0);
    g.scale = Vec3(s, s, s);
    g.opacity = 0.5;
    g.color = Vec3::Constant(0.5);
    f.scene.mode = SceneMode::Planar;
    f.scene.primitives.push_back(g);
    // the quadrupole is odd in both image axes, so it is orthogonal to every
    // parameter derivative of an isotropic kernel centered on the pixel grid
    View view{cam, render(f.scene, cam, RenderOptions{RenderMode::Additive, 0.0}).image};
    for (int row = 0; row < cam.height; ++row) {
        for (int col = 0; col < cam.width; ++col) {
            const Vec2 d = cam.pixelCenter(col, row) - Vec2(0.5, 0.5);
            const double psi = d[0] * d[1] / (s * s) * std::exp(-d.squaredNorm() / (2.0 * s * s));
            view.target.at(col, row) += eta * psi;
        }
    }
    f.views.push_back(std::move(view));
    return f;
}

CheckResult
check_saddle_escape() {
    const auto start = Clock::now();
    CheckResult r{"saddle-escape", false, 0.0, 0.01, 0.0, 30.0, ""};
    const SaddleFixture f = make_saddle_fixture();
    const LossSetup setup{RenderMode::Additive, LossKind::L2, 0.0};
    const double L0 = scene_loss(f.scene, f.views, setup);

    const StepStats stats = step_stats(f.scene, f.views, LossKind::L2);
    const GaussianGrad &g = stats.grads[0];
    Eigen::Matrix<double, 14, 1> full;
    full << g.position, g.scale, g.rotation, g.opacity, g.color;
    const double gradNorm = full.norm();

    DensifyConfig cfg;
    const auto decisions = sdc_decide(stats.acc, cfg, SceneMode::Planar);
    const double lambda = decisions[0].lambdaMin;
    const Scene split = sdc_apply(f.scene, decisions, cfg);
    const double splitDecrease = L0 - scene_loss(split, f.views, setup);

    TrainConfig tc;
    tc.steps = 500;
    tc.policy = DensifyPolicy::None;
    tc.loss = LossKind::L2;
    tc.renderMode = RenderMode::Additive;
    tc.sigmaCutoff = 0.0;
    tc.logInterval = 500;
    const TrainReport gd = train(f.scene, f.views, tc);
    const double gdDecrease = L0 - gd.finalLoss;

    r.measured = splitDecrease > 0.0 ? gdDecrease / splitDecrease : std::numeric_limits<double>::infinity();
    const bool ok = gradNorm < 1e-6 && lambda < -1e-3 && decisions[0].verdict == Verdict::Split &&
                    splitDecrease > 0.0 && r.measured < r.tolerance;
    r.detail = "|grad| " + fmt(gradNorm) + ", lambda_min " + fmt(lambda) + ", split decrease " + fmt(splitDecrease) +
               ", 500-step GD decrease " + fmt(gdDecrease) + " (ratio shown)";
    return finish(r, start, ok);
}

const std::vector<CheckInfo> &
all_checks() {
    static const std::vector<CheckInfo> checks{
        {"hessian", "closed-form position Hessian vs second differences", [] { return check_hessian_exactness(); }},
        {"gradient", "backprop vs central differences, both render modes", [] { return check_gradient_exactness(); }},
        {"eigensolver", "closed-form 3x3 eigenpairs vs charpoly bisection", [] { return check_eigensolver(); }},
        {"expansion", "split-loss expansion residual shrinks cubically", [] { return check_split_expansion_cubic(); }},
        {"steepest-split", "steepest split beats sampled admissible splits", [] { return check_steepest_split_optimality(); }},
        {"psd-no-gain", "no split lowers the loss when S is PSD", [] { return check_psd_no_gain(); }},
        {"saddle-escape", "one split escapes a zero-gradient saddle", [] { return check_saddle_escape(); }},
    };
    return checks;
}

std::string
format_check(const CheckResult &r) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-4s  %-14s measured %-10s tolerance %-8s %7.2fs (limit %.0fs)",
                  r.passed ? "PASS" : "FAIL", r.name.c_str(), fmt(r.measured).c_str(), fmt(r.tolerance).c_str(),
                  r.seconds, r.timeLimit);
    os << line;
    if (!r.detail.empty())
        os << "  " << r.detail;
    return os.str();
}

} // namespace steepgs
