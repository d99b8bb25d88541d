// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0
//
// Gaussian primitives, affine cameras, and the projected kernel
//
//   sigma(x) = o * exp(-1/2 (x - Pp - b)^T (P Sigma P^T)^{-1} (x - Pp - b))
//
// Everything here is templated on the scalar type so the same code serves
// the double-precision pipeline and any higher-precision oracle.

#pragma once

#include "steepgs/error.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace steepgs {

template <typename Scalar> using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Vec4T = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar> using Mat2T = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar> using Mat3T = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Mat23T = Eigen::Matrix<Scalar, 2, 3>;

/// Determinant floor below which a projected covariance counts as collapsed.
inline constexpr double kDegenerateDet = 1e-12;

/// Rotation stored as (w, x, y, z). Returns the rotation matrix of q / |q|.
template <typename Scalar>
Mat3T<Scalar>
rotation_matrix(const Vec4T<Scalar> &q) {
    const Vec4T<Scalar> n = q / q.norm();
    const Scalar w = n[0], x = n[1], y = n[2], z = n[3];
    Mat3T<Scalar> R;
    R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return R;
}

/// Quaternion (w, x, y, z) for an in-plane rotation by `angle` about z.
template <typename Scalar>
Vec4T<Scalar>
planar_rotation(Scalar angle) {
    using std::cos;
    using std::sin;
    return Vec4T<Scalar>(cos(angle / 2), 0, 0, sin(angle / 2));
}

template <typename Scalar> struct GaussianT {
    std::int64_t id = 0;
    Vec3T<Scalar> position = Vec3T<Scalar>::Zero();
    /// Per-axis standard deviations, strictly positive.
    Vec3T<Scalar> scale = Vec3T<Scalar>::Ones();
    /// Unit quaternion (w, x, y, z).
    Vec4T<Scalar> rotation = Vec4T<Scalar>(1, 0, 0, 0);
    Scalar opacity = 1;
    Vec3T<Scalar> color = Vec3T<Scalar>::Constant(Scalar(0.5));
    /// Compositing sort key; smaller is nearer.
    Scalar depth = 0;

    Mat3T<Scalar>
    rotationMatrix() const {
        return rotation_matrix<Scalar>(rotation);
    }

    /// R diag(s^2) R^T.
    Mat3T<Scalar>
    covariance() const {
        const Mat3T<Scalar> M = rotationMatrix() * scale.asDiagonal();
        return M * M.transpose();
    }

    /// Throws InvalidArgument when a field violates its domain.
    void
    validate() const {
        if (!(scale.array() > Scalar(0)).all())
            throw InvalidArgument("gaussian " + std::to_string(id) + ": scale must be positive");
        using std::abs;
        if (abs(rotation.norm() - Scalar(1)) > Scalar(1e-9))
            throw InvalidArgument("gaussian " + std::to_string(id) + ": rotation is not a unit quaternion");
        if (!(opacity >= Scalar(0) && opacity <= Scalar(1)))
            throw InvalidArgument("gaussian " + std::to_string(id) + ": opacity outside [0,1]");
        if (!((color.array() >= Scalar(0)).all() && (color.array() <= Scalar(1)).all()))
            throw InvalidArgument("gaussian " + std::to_string(id) + ": color outside [0,1]");
        if (!position.allFinite() || !std::isfinite(static_cast<double>(depth)))
            throw InvalidArgument("gaussian " + std::to_string(id) + ": non-finite position or depth");
    }
};

/// Affine image map x = P p + b. Pixel (col, row) samples the plane at
/// ((col + 0.5) * pixelScale, (row + 0.5) * pixelScale).
template <typename Scalar> struct CameraT {
    Mat23T<Scalar> P = (Mat23T<Scalar>() << 1, 0, 0, 0, 1, 0).finished();
    Vec2T<Scalar> b = Vec2T<Scalar>::Zero();
    int width = 1;
    int height = 1;
    Scalar pixelScale = 1;

    /// P = [I2 | 0], b = 0.
    static CameraT
    planar(int width, int height, Scalar pixelScale) {
        CameraT cam;
        cam.width = width;
        cam.height = height;
        cam.pixelScale = pixelScale;
        cam.validate();
        return cam;
    }

    Vec2T<Scalar>
    pixelCenter(int col, int row) const {
        return Vec2T<Scalar>((Scalar(col) + Scalar(0.5)) * pixelScale,
                             (Scalar(row) + Scalar(0.5)) * pixelScale);
    }

    int
    pixelCount() const {
        return width * height;
    }

    void
    validate() const {
        if (width <= 0 || height <= 0)
            throw InvalidArgument("camera: image size must be positive");
        if (!(pixelScale > Scalar(0)))
            throw InvalidArgument("camera: pixel scale must be positive");
        // rank 2 <=> P P^T nonsingular; compare against the squared row norms
        const Mat2T<Scalar> PPt = P * P.transpose();
        using std::abs;
        const Scalar ref = PPt(0, 0) * PPt(1, 1);
        if (!(ref > Scalar(0)) || abs(PPt(0, 0) * PPt(1, 1) - PPt(0, 1) * PPt(1, 0)) <= Scalar(1e-12) * ref)
            throw InvalidArgument("camera: projection matrix must have rank 2");
        if (!P.allFinite() || !b.allFinite())
            throw InvalidArgument("camera: non-finite projection");
    }
};

enum class SceneMode { Planar, Affine3D };

template <typename Scalar> struct SceneT {
    SceneMode mode = SceneMode::Planar;
    std::vector<GaussianT<Scalar>> primitives;

    std::size_t
    size() const {
        return primitives.size();
    }

    bool
    empty() const {
        return primitives.empty();
    }

    std::int64_t
    nextId() const {
        std::int64_t next = 0;
        for (const auto &g : primitives)
            next = std::max(next, g.id + 1);
        return next;
    }

    void
    validate() const {
        std::unordered_set<std::int64_t> seen;
        for (const auto &g : primitives) {
            g.validate();
            if (!seen.insert(g.id).second)
                throw InvalidArgument("scene: duplicate id " + std::to_string(g.id));
        }
    }
};

template <typename Scalar>
Vec2T<Scalar>
project_point(const Vec3T<Scalar> &p, const CameraT<Scalar> &cam) {
    return cam.P * p + cam.b;
}

/// P Sigma P^T, exactly symmetric. Throws DegenerateCovariance when the
/// determinant collapses below kDegenerateDet.
template <typename Scalar>
Mat2T<Scalar>
project_cov(const Mat3T<Scalar> &cov, const CameraT<Scalar> &cam) {
    Mat2T<Scalar> out = cam.P * cov * cam.P.transpose();
    out(1, 0) = out(0, 1);
    if (!(out(0, 0) * out(1, 1) - out(0, 1) * out(1, 0) >= Scalar(kDegenerateDet)))
        throw DegenerateCovariance("projected covariance is degenerate");
    return out;
}

/// Per-render cached projection of one primitive.
template <typename Scalar> struct ProjectedGaussianT {
    Vec2T<Scalar> mean;
    Mat2T<Scalar> cov;
    /// cov^{-1} from the adjugate.
    Mat2T<Scalar> conic;
    Scalar opacity;

    /// o * exp(-1/2 d^T conic d), d = x - mean.
    Scalar
    sigma(const Vec2T<Scalar> &x) const {
        const Vec2T<Scalar> d = x - mean;
        using std::exp;
        return opacity * exp(Scalar(-0.5) * d.dot(conic * d));
    }
};

template <typename Scalar>
Mat2T<Scalar>
inverse_2x2(const Mat2T<Scalar> &m) {
    const Scalar det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    Mat2T<Scalar> inv;
    inv << m(1, 1) / det, -m(0, 1) / det, -m(1, 0) / det, m(0, 0) / det;
    return inv;
}

template <typename Scalar>
ProjectedGaussianT<Scalar>
project_gaussian(const GaussianT<Scalar> &g, const CameraT<Scalar> &cam) {
    ProjectedGaussianT<Scalar> out;
    out.mean = project_point(g.position, cam);
    out.cov = project_cov(g.covariance(), cam);
    out.conic = inverse_2x2(out.cov);
    out.conic(1, 0) = out.conic(0, 1);
    out.opacity = g.opacity;
    return out;
}

template <typename Scalar>
Scalar
eval_projected_sigma(const Vec2T<Scalar> &x, const GaussianT<Scalar> &g, const CameraT<Scalar> &cam) {
    return project_gaussian(g, cam).sigma(x);
}

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Vec4 = Vec4T<double>;
using Mat2 = Mat2T<double>;
using Mat3 = Mat3T<double>;
using Mat23 = Mat23T<double>;
using Gaussian = GaussianT<double>;
using Camera = CameraT<double>;
using Scene = SceneT<double>;
using ProjectedGaussian = ProjectedGaussianT<double>;

} // namespace steepgs
