// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode derivatives of the photometric loss through a RenderTape, and
// the closed-form Hessian of a projected kernel with respect to its 3D mean:
//
//   d^2 sigma / dp^2 = sigma (u u^T - P^T A^{-1} P),   u = P^T A^{-1} (x - Pp - b)
//
// with A = P Sigma P^T. Under a fixed affine camera this Hessian is exact.

#pragma once

#include "steepgs/primitives.hpp"
#include "steepgs/renderer.hpp"

#include <vector>

namespace steepgs {

struct GaussianGrad {
    Vec3 position = Vec3::Zero();
    Vec3 scale = Vec3::Zero();
    /// Ambient (w, x, y, z) gradient projected onto the unit-sphere tangent at q.
    Vec4 rotation = Vec4::Zero();
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();
    /// dL/d(P p + b), the view-space gradient.
    Vec2 mean2d = Vec2::Zero();

    GaussianGrad &
    operator+=(const GaussianGrad &o) {
        position += o.position;
        scale += o.scale;
        rotation += o.rotation;
        opacity += o.opacity;
        color += o.color;
        mean2d += o.mean2d;
        return *this;
    }
};

struct PerGaussianGrads {
    /// One entry per primitive, in scene order. Untaped primitives stay zero.
    std::vector<GaussianGrad> grads;
    /// dL/dsigma for every tape entry, aligned with RenderTape::entries.
    std::vector<double> dLdSigma;
};

/// Exact gradients of `weight * loss(render(scene, cam), target)` through the
/// tape's render mode. Throws StaleState if the tape was not produced for
/// this scene and camera.
PerGaussianGrads backprop(const Scene &scene, const Camera &cam, const Image &target, const RenderTape &tape,
                          LossKind loss = LossKind::L1, double weight = 1.0);

/// Reconstructs the rendered image from a tape; bit-identical to render().
Image replay(const Scene &scene, const RenderTape &tape);

/// Hessian of the projected kernel in the primitive's 3D position.
template <typename Scalar>
Mat3T<Scalar>
position_hessian(const ProjectedGaussianT<Scalar> &pg, const Mat23T<Scalar> &P, const Vec2T<Scalar> &x) {
    const Vec2T<Scalar> d = x - pg.mean;
    const Scalar sigma = pg.sigma(x);
    const Vec3T<Scalar> u = P.transpose() * (pg.conic * d);
    const Mat3T<Scalar> curvature = P.transpose() * pg.conic * P;
    Mat3T<Scalar> H;
    for (int r = 0; r < 3; ++r) {
        for (int c = r; c < 3; ++c) {
            H(r, c) = sigma * (u[r] * u[c] - curvature(r, c));
            H(c, r) = H(r, c);
        }
    }
    return H;
}

template <typename Scalar>
Mat3T<Scalar>
position_hessian(const GaussianT<Scalar> &g, const CameraT<Scalar> &cam, const Vec2T<Scalar> &x) {
    return position_hessian(project_gaussian(g, cam), cam.P, x);
}

} // namespace steepgs
