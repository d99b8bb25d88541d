// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/eigsym.hpp"
#include "steepgs/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace steepgs;

namespace {

Mat3
random_symmetric(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    Mat3 A;
    for (int r = 0; r < 3; ++r)
        for (int c = r; c < 3; ++c)
            A(r, c) = A(c, r) = u(rng);
    return A;
}

void
expect_canonical(const auto &v) {
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-9) {
            EXPECT_GT(v[i], 0.0);
            return;
        }
    }
}

} // namespace

TEST(EigSym3, Diagonal) {
    const Mat3 A = Vec3(3.0, 2.0, 1.0).asDiagonal();
    const auto pairs = eig_sym3(A);
    EXPECT_NEAR(pairs[0].value, 1.0, 1e-12);
    EXPECT_NEAR(pairs[1].value, 2.0, 1e-12);
    EXPECT_NEAR(pairs[2].value, 3.0, 1e-12);
    EXPECT_LT((pairs[0].vector - Vec3(0, 0, 1)).norm(), 1e-12);
}

TEST(EigSym3, IdentityUsesStandardBasis) {
    const auto pairs = eig_sym3(Mat3(Mat3::Identity()));
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(pairs[k].value, 1.0);
        EXPECT_EQ(pairs[k].vector, Vec3(Vec3::Unit(k)));
    }
}

TEST(EigSym3, MatchesBisectionOracle) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const Mat3 A = random_symmetric(rng);
        const auto pairs = eig_sym3(A);
        const auto oracle = charpoly_bisection_eigenvalues(A);
        for (int k = 0; k < 3; ++k) {
            EXPECT_NEAR(pairs[k].value, oracle[k], 1e-9);
            EXPECT_LT((A * pairs[k].vector - pairs[k].value * pairs[k].vector).norm(), 1e-8 * (1.0 + A.norm()));
            EXPECT_NEAR(pairs[k].vector.norm(), 1.0, 1e-12);
            expect_canonical(pairs[k].vector);
        }
        EXPECT_LE(pairs[0].value, pairs[1].value);
        EXPECT_LE(pairs[1].value, pairs[2].value);
    }
}

TEST(EigSym3, TraceDeterminantAndOrthogonality) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const Mat3 A = random_symmetric(rng);
        const auto p = eig_sym3(A);
        const double tol = 1e-9 * (1.0 + A.norm());
        EXPECT_NEAR(p[0].value + p[1].value + p[2].value, A.trace(), tol);
        const double det = A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) -
                           A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
                           A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
        EXPECT_NEAR(p[0].value * p[1].value * p[2].value, det, tol * (1.0 + A.squaredNorm()));
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                if (std::abs(p[i].value - p[j].value) > 1e-6)
                    EXPECT_LT(std::abs(p[i].vector.dot(p[j].vector)), 1e-8);
    }
}

TEST(EigSym3, RepeatedEigenvalue) {
    // rank-one update of the identity: eigenvalues (1, 1, 4)
    const Vec3 n = Vec3(1.0, 1.0, 1.0).normalized();
    const Mat3 A = Mat3::Identity() + 3.0 * n * n.transpose();
    const auto p = eig_sym3(A);
    EXPECT_NEAR(p[0].value, 1.0, 1e-12);
    EXPECT_NEAR(p[1].value, 1.0, 1e-12);
    EXPECT_NEAR(p[2].value, 4.0, 1e-12);
    for (int k = 0; k < 3; ++k)
        EXPECT_LT((A * p[k].vector - p[k].value * p[k].vector).norm(), 1e-10);
    EXPECT_LT(std::abs(p[0].vector.dot(p[1].vector)), 1e-10);
}

TEST(EigSym2, Diagonal) {
    const auto p = eig_sym2(Mat2(Vec2(5.0, 7.0).asDiagonal()));
    EXPECT_EQ(p[0].value, 5.0);
    EXPECT_EQ(p[1].value, 7.0);
    EXPECT_LT((p[0].vector - Vec2(1, 0)).norm(), 1e-15);
}

TEST(EigSym2, OffDiagonal) {
    Mat2 A;
    A << 0, 1, 1, 0;
    const auto p = eig_sym2(A);
    EXPECT_NEAR(p[0].value, -1.0, 1e-15);
    EXPECT_NEAR(p[1].value, 1.0, 1e-15);
    EXPECT_LT((p[0].vector - Vec2(1, -1) / std::sqrt(2.0)).norm(), 1e-15);
}

TEST(EigSym2, MatchesDiscriminantOracle) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = u(rng), b = u(rng), d = u(rng);
        Mat2 A;
        A << a, b, b, d;
        const double mid = 0.5 * (a + d);
        const double rad = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
        const auto p = eig_sym2(A);
        EXPECT_NEAR(p[0].value, mid - rad, 1e-12);
        EXPECT_NEAR(p[1].value, mid + rad, 1e-12);
        EXPECT_LT((A * p[0].vector - p[0].value * p[0].vector).norm(), 1e-10);
        expect_canonical(p[0].vector);
    }
}

TEST(MinEigpair, Examples) {
    const auto a = min_eigpair(Mat3(Vec3(1.0, 2.0, 3.0).asDiagonal()));
    EXPECT_NEAR(a.value, 1.0, 1e-12);
    EXPECT_LT((a.vector - Vec3(1, 0, 0)).norm(), 1e-12);
    const auto b = min_eigpair(Mat3(-Mat3::Identity()));
    EXPECT_EQ(b.value, -1.0);
    EXPECT_EQ(b.vector, Vec3(1, 0, 0));
}

TEST(MinEigpair, IsFirstOfFullDecomposition) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat3 A = random_symmetric(rng);
        const auto full = eig_sym3(A);
        const auto m = min_eigpair(A);
        EXPECT_EQ(m.value, full[0].value);
        EXPECT_EQ(m.vector, full[0].vector);
    }
}

TEST(EigSym3, ScaleInvariantAcrossMagnitudes) {
    std::mt19937_64 rng(31);
    for (double scale : {1e-8, 1e-3, 1e3, 1e8}) {
        const Mat3 A = scale * random_symmetric(rng);
        const auto p = eig_sym3(A);
        const auto oracle = charpoly_bisection_eigenvalues(A);
        for (int k = 0; k < 3; ++k)
            EXPECT_NEAR(p[k].value, oracle[k], 1e-9 * scale * 10.0);
    }
}
