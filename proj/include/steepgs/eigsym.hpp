// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0
//
// Closed-form eigendecomposition of small symmetric matrices.
//
// 3x3 eigenvalues use the trigonometric root of the depressed characteristic
// cubic: with q = tr(A)/3, p = sqrt(tr((A - qI)^2)/6) and B = (A - qI)/p,
// every eigenvalue is q + 2p cos(acos(det(B)/2)/3 + 2k pi/3). Eigenvectors
// come from the widest cross product of two rows of A - lambda I, falling back
// to shifted inverse iteration plus Gram-Schmidt for repeated eigenvalues.
//
// Output pairs are sorted ascending; every vector is unit length with its
// first component of magnitude > 1e-9 positive.

#pragma once

#include "steepgs/primitives.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace steepgs {

template <typename Scalar, int Dim> struct EigenPairT {
    Scalar value;
    Eigen::Matrix<Scalar, Dim, 1> vector;
};

using EigenPair2 = EigenPairT<double, 2>;
using EigenPair3 = EigenPairT<double, 3>;

namespace detail {

template <typename Derived>
void
canonical_sign(Eigen::MatrixBase<Derived> &v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        using std::abs;
        if (abs(v[i]) > decltype(abs(v[i]))(1e-9)) {
            if (v[i] < 0)
                v = -v;
            return;
        }
    }
}

template <typename Scalar>
Scalar
max_abs(const Mat3T<Scalar> &A) {
    return A.cwiseAbs().maxCoeff();
}

/// Solves M y = rhs via the adjugate. Returns false if M is numerically singular.
template <typename Scalar>
bool
solve_3x3(const Mat3T<Scalar> &M, const Vec3T<Scalar> &rhs, Vec3T<Scalar> &y) {
    const Vec3T<Scalar> c0 = M.row(1).transpose().cross(M.row(2).transpose());
    const Vec3T<Scalar> c1 = M.row(2).transpose().cross(M.row(0).transpose());
    const Vec3T<Scalar> c2 = M.row(0).transpose().cross(M.row(1).transpose());
    const Scalar det = M.row(0).dot(c0.transpose());
    using std::abs;
    if (!(abs(det) > std::numeric_limits<Scalar>::min()))
        return false;
    Mat3T<Scalar> inv;
    inv.col(0) = c0;
    inv.col(1) = c1;
    inv.col(2) = c2;
    y = inv * rhs / det;
    return y.allFinite();
}

/// Unit vector orthogonal to every entry of `found`, starting from the
/// eigen-space of `lambda` reached by two shifted inverse-iteration steps.
template <typename Scalar>
Vec3T<Scalar>
inverse_iteration_vector(const Mat3T<Scalar> &A, Scalar lambda, const std::array<Vec3T<Scalar>, 3> &found,
                         const std::array<bool, 3> &have) {
    const Scalar shift = Scalar(1e-8);
    const Mat3T<Scalar> M = A - (lambda - shift) * Mat3T<Scalar>::Identity();
    auto orthogonalize = [&](Vec3T<Scalar> v) {
        for (int k = 0; k < 3; ++k)
            if (have[k])
                v -= found[k].dot(v) * found[k];
        return v;
    };

    const std::array<Vec3T<Scalar>, 4> seeds = {
        Vec3T<Scalar>(1, Scalar(0.7071067811865476), Scalar(0.5)).normalized(),
        Vec3T<Scalar>::UnitX(), Vec3T<Scalar>::UnitY(), Vec3T<Scalar>::UnitZ()};
    for (const auto &seed : seeds) {
        Vec3T<Scalar> v = orthogonalize(seed);
        if (v.norm() < Scalar(1e-6))
            continue;
        v.normalize();
        for (int it = 0; it < 2; ++it) {
            Vec3T<Scalar> y;
            if (!solve_3x3(M, v, y))
                break;
            y = orthogonalize(y);
            if (y.norm() < Scalar(1e-30))
                break;
            v = y.normalized();
        }
        v = orthogonalize(v);
        if (v.norm() > Scalar(1e-6))
            return v.normalized();
    }
    // unreachable for three mutually orthogonal seeds minus at most two vectors
    return Vec3T<Scalar>::UnitZ();
}

} // namespace detail

/// Full eigendecomposition of a symmetric 3x3 matrix, ascending.
template <typename Scalar>
std::array<EigenPairT<Scalar, 3>, 3>
eig_sym3(const Mat3T<Scalar> &input) {
    using std::acos;
    using std::cos;
    using std::sqrt;
    std::array<EigenPairT<Scalar, 3>, 3> out;

    const Mat3T<Scalar> sym = (input + input.transpose()) / Scalar(2);
    const Scalar scale = detail::max_abs(sym);
    if (!(scale > Scalar(0))) {
        for (int k = 0; k < 3; ++k)
            out[k] = {Scalar(0), Vec3T<Scalar>::Unit(k)};
        return out;
    }
    // work on the max-abs normalized matrix so thresholds are scale-free
    const Mat3T<Scalar> A = sym / scale;

    const Scalar q = A.trace() / Scalar(3);
    const Mat3T<Scalar> C = A - q * Mat3T<Scalar>::Identity();
    const Scalar p = sqrt((C * C).trace() / Scalar(6));
    if (p < Scalar(1e-12)) {
        for (int k = 0; k < 3; ++k)
            out[k] = {q * scale, Vec3T<Scalar>::Unit(k)};
        return out;
    }

    const Mat3T<Scalar> B = C / p;
    Scalar r = B.row(0).dot(B.row(1).cross(B.row(2))) / Scalar(2);
    r = std::clamp(r, Scalar(-1), Scalar(1));
    const Scalar phi = acos(r) / Scalar(3);
    constexpr Scalar third = Scalar(2) * std::numbers::pi_v<Scalar> / Scalar(3);
    // k = 0 is the largest root, k = 1 the smallest, k = 2 the middle one
    std::array<Scalar, 3> lambda = {q + Scalar(2) * p * cos(phi + third),
                                    q + Scalar(2) * p * cos(phi + Scalar(2) * third),
                                    q + Scalar(2) * p * cos(phi)};
    std::sort(lambda.begin(), lambda.end());

    std::array<Vec3T<Scalar>, 3> vec;
    std::array<bool, 3> have = {false, false, false};
    for (int k = 0; k < 3; ++k) {
        const Mat3T<Scalar> M = A - lambda[k] * Mat3T<Scalar>::Identity();
        const std::array<Vec3T<Scalar>, 3> cross = {
            Vec3T<Scalar>(M.row(0).transpose().cross(M.row(1).transpose())),
            Vec3T<Scalar>(M.row(0).transpose().cross(M.row(2).transpose())),
            Vec3T<Scalar>(M.row(1).transpose().cross(M.row(2).transpose()))};
        int best = 0;
        for (int c = 1; c < 3; ++c)
            if (cross[c].squaredNorm() > cross[best].squaredNorm())
                best = c;
        if (cross[best].norm() >= Scalar(1e-9)) {
            vec[k] = cross[best].normalized();
            have[k] = true;
        }
    }
    for (int k = 0; k < 3; ++k) {
        if (have[k])
            continue;
        vec[k] = detail::inverse_iteration_vector(A, lambda[k], vec, have);
        have[k] = true;
    }

    for (int k = 0; k < 3; ++k) {
        detail::canonical_sign(vec[k]);
        out[k] = {lambda[k] * scale, vec[k]};
    }
    return out;
}

/// Full eigendecomposition of a symmetric 2x2 matrix, ascending.
template <typename Scalar>
std::array<EigenPairT<Scalar, 2>, 2>
eig_sym2(const Mat2T<Scalar> &input) {
    using std::abs;
    using std::hypot;
    std::array<EigenPairT<Scalar, 2>, 2> out;
    const Scalar a = input(0, 0);
    const Scalar c = input(1, 1);
    const Scalar b = (input(0, 1) + input(1, 0)) / Scalar(2);
    const Scalar scale = std::max({abs(a), abs(b), abs(c)});
    const Scalar mean = (a + c) / Scalar(2);
    const Scalar radius = hypot((a - c) / Scalar(2), b);
    if (!(scale > Scalar(0)) || radius < Scalar(1e-12) * scale) {
        out[0] = {mean, Vec2T<Scalar>::UnitX()};
        out[1] = {mean, Vec2T<Scalar>::UnitY()};
        return out;
    }
    const Scalar lo = mean - radius;
    const Scalar hi = mean + radius;
    // (A - lo I) v = 0: v is perpendicular to the longer of the two rows
    const Vec2T<Scalar> row0(a - lo, b);
    const Vec2T<Scalar> row1(b, c - lo);
    const Vec2T<Scalar> &row = row0.squaredNorm() >= row1.squaredNorm() ? row0 : row1;
    Vec2T<Scalar> vmin = Vec2T<Scalar>(-row[1], row[0]).normalized();
    Vec2T<Scalar> vmax(-vmin[1], vmin[0]);
    detail::canonical_sign(vmin);
    detail::canonical_sign(vmax);
    out[0] = {lo, vmin};
    out[1] = {hi, vmax};
    return out;
}

template <typename Scalar>
EigenPairT<Scalar, 3>
min_eigpair(const Mat3T<Scalar> &A) {
    return eig_sym3(A)[0];
}

template <typename Scalar>
EigenPairT<Scalar, 2>
min_eigpair(const Mat2T<Scalar> &A) {
    return eig_sym2(A)[0];
}

} // namespace steepgs
