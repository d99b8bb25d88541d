// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/diff.hpp"

#include <cmath>

namespace steepgs {

namespace {

/// Chain dL/dR through R(q / |q|) and project onto the tangent of the sphere.
Vec4
rotation_gradient(const Mat3 &dR, const Vec4 &q) {
    const double len = q.norm();
    const Vec4 n = q / len;
    const double w = n[0], x = n[1], y = n[2], z = n[3];
    Vec4 g;
    // d/dw
    g[0] = 2.0 * (-z * dR(0, 1) + y * dR(0, 2) + z * dR(1, 0) - x * dR(1, 2) - y * dR(2, 0) + x * dR(2, 1));
    // d/dx
    g[1] = 2.0 * (y * dR(0, 1) + z * dR(0, 2) + y * dR(1, 0) - 2.0 * x * dR(1, 1) - w * dR(1, 2) + z * dR(2, 0) +
                  w * dR(2, 1) - 2.0 * x * dR(2, 2));
    // d/dy
    g[2] = 2.0 * (-2.0 * y * dR(0, 0) + x * dR(0, 1) + w * dR(0, 2) + x * dR(1, 0) + z * dR(1, 2) - w * dR(2, 0) +
                  z * dR(2, 1) - 2.0 * y * dR(2, 2));
    // d/dz
    g[3] = 2.0 * (-2.0 * z * dR(0, 0) - w * dR(0, 1) + x * dR(0, 2) + w * dR(1, 0) - 2.0 * z * dR(1, 1) +
                  y * dR(1, 2) + x * dR(2, 0) + y * dR(2, 1));
    return (g - g.dot(n) * n) / len;
}

} // namespace

Image
replay(const Scene &scene, const RenderTape &tape) {
    Image img(tape.width, tape.height);
    const bool composited = tape.mode == RenderMode::Composited;
    for (std::size_t pix = 0; pix < tape.pixelCount(); ++pix) {
        Eigen::Array3d color = Eigen::Array3d::Zero();
        for (std::size_t k = tape.offsets[pix]; k < tape.offsets[pix + 1]; ++k) {
            const TapeEntry &e = tape.entries[k];
            const auto &c = scene.primitives[e.primitive].color;
            if (composited)
                color += c.array() * (e.sigma * e.transmittance);
            else
                color += c.array() * e.sigma;
        }
        img.pixels.row(static_cast<Eigen::Index>(pix)) = color.transpose();
    }
    return img;
}

PerGaussianGrads
backprop(const Scene &scene, const Camera &cam, const Image &target, const RenderTape &tape, LossKind loss,
         double weight) {
    if (tape.fingerprint != fingerprint(scene, cam) || tape.projected.size() != scene.size())
        throw StaleState("backprop: tape does not belong to this scene and camera");
    if (target.width != tape.width || target.height != tape.height)
        throw DimensionMismatch("backprop: target size differs from the rendered image");

    const std::size_t n = scene.size();
    PerGaussianGrads out;
    out.grads.assign(n, GaussianGrad{});
    out.dLdSigma.assign(tape.entries.size(), 0.0);

    const Image rendered = replay(scene, tape);
    const PixelArray dLdC = loss_gradient(loss, rendered, target) * weight;

    std::vector<Mat2> dLdCov(n, Mat2::Zero());
    const bool composited = tape.mode == RenderMode::Composited;

    for (int row = 0; row < tape.height; ++row) {
        for (int col = 0; col < tape.width; ++col) {
            const Eigen::Index pix = rendered.index(col, row);
            const std::size_t begin = tape.offsets[pix];
            const std::size_t end = tape.offsets[pix + 1];
            if (begin == end)
                continue;
            const Eigen::Array3d gC = dLdC.row(pix).transpose();
            const Vec2 x = cam.pixelCenter(col, row);
            // colour contributed by everything behind the current entry,
            // relative to the transmittance just past it
            Eigen::Array3d behind = Eigen::Array3d::Zero();
            for (std::size_t k = end; k-- > begin;) {
                const TapeEntry &e = tape.entries[k];
                const Eigen::Array3d c = scene.primitives[e.primitive].color.array();
                GaussianGrad &g = out.grads[e.primitive];
                double dSigma;
                if (composited) {
                    dSigma = (gC * e.transmittance * (c - behind)).sum();
                    g.color += (gC * (e.transmittance * e.sigma)).matrix();
                    behind = c * e.sigma + (1.0 - e.sigma) * behind;
                } else {
                    dSigma = (gC * c).sum();
                    g.color += (gC * e.sigma).matrix();
                }
                out.dLdSigma[k] = dSigma;
                if (dSigma == 0.0)
                    continue;

                const ProjectedGaussian &pg = tape.projected[e.primitive];
                const Vec2 d = x - pg.mean;
                const Vec2 u = pg.conic * d;
                const double falloff = std::exp(-0.5 * d.dot(u));
                g.opacity += dSigma * falloff;
                g.mean2d += (dSigma * e.sigma) * u;
                dLdCov[e.primitive] += (0.5 * dSigma * e.sigma) * (u * u.transpose());
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        GaussianGrad &g = out.grads[i];
        const Gaussian &prim = scene.primitives[i];
        g.position = cam.P.transpose() * g.mean2d;
        const Mat3 dCov3 = cam.P.transpose() * dLdCov[i] * cam.P;
        const Mat3 R = prim.rotationMatrix();
        const Mat3 M = R * prim.scale.asDiagonal();
        const Mat3 dM = (dCov3 + dCov3.transpose()) * M;
        for (int k = 0; k < 3; ++k)
            g.scale[k] = dM.col(k).dot(R.col(k));
        const Mat3 dR = dM * prim.scale.asDiagonal();
        g.rotation = rotation_gradient(dR, prim.rotation);
    }
    return out;
}

} // namespace steepgs
