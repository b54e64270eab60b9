// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "formavg/error.hpp"
#include "formavg/forms.hpp"
#include "formavg/spaces.hpp"

namespace formavg
{
namespace
{

constexpr Scale kScales[] = {Scale::V, Scale::H, Scale::VPrime, Scale::VGamma,
                             Scale::VPrimeGamma};

Vector coords(std::initializer_list<double> xs)
{
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (double x : xs) {
        v[k++] = x;
    }
    return v;
}

TEST(MakeTriple, IdentityWeights)
{
    const GelfandTriple tr = make_triple({1.0, 1.0}, 0.0);
    EXPECT_DOUBLE_EQ(tr.c_H(), 1.0);
    const Vector u = coords({0.3, -1.2});
    EXPECT_DOUBLE_EQ(tr.norm(u, Scale::V), tr.norm(u, Scale::H));
}

TEST(MakeTriple, EmbeddingConstant)
{
    EXPECT_DOUBLE_EQ(make_triple({4.0, 16.0}, 0.0).c_H(), 0.5);
}

TEST(MakeTriple, RejectsInvalidInput)
{
    EXPECT_THROW(make_triple({}, 0.0), Error);
    EXPECT_THROW(make_triple({0.5, 2.0}, 0.0), Error);
    EXPECT_THROW(make_triple({1.0, 2.0}, 1.0), Error);
    EXPECT_THROW(make_triple({1.0, 2.0}, -0.1), Error);
    EXPECT_THROW(make_triple({3.0, 2.0}, 0.0), Error);
}

TEST(Norm, InterpolationScale)
{
    const GelfandTriple tr = make_triple({1.0, 4.0, 9.0}, 0.5);
    const Vector e1 = coords({0.0, 1.0, 0.0});
    EXPECT_NEAR(tr.norm(e1, Scale::V), 2.0, 1e-15);
    EXPECT_NEAR(tr.norm(e1, Scale::VGamma), std::sqrt(2.0), 1e-15);
}

TEST(Norm, WeightedSums)
{
    const GelfandTriple tr = make_triple({1.0, 4.0}, 0.0);
    const Vector u = coords({1.0, 1.0});
    EXPECT_NEAR(tr.norm(u, Scale::V), std::sqrt(5.0), 1e-15);
    EXPECT_NEAR(tr.norm(u, Scale::VPrime), std::sqrt(1.25), 1e-15);
}

TEST(Norm, ZeroVector)
{
    const GelfandTriple tr = make_triple({1.0, 3.0, 7.0}, 0.3);
    for (Scale s : kScales) {
        EXPECT_EQ(tr.norm(Vector::Zero(3), s), 0.0);
    }
}

TEST(Norm, DimensionMismatch)
{
    const GelfandTriple tr = make_triple({1.0, 4.0}, 0.0);
    try {
        tr.norm(Vector::Zero(3), Scale::V);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
}

TEST(OpNorm, Examples)
{
    const GelfandTriple tr = make_triple({1.0, 4.0}, 0.0);
    const Matrix I = Matrix::Identity(2, 2);
    EXPECT_NEAR(tr.op_norm(I, Scale::V, Scale::V), 1.0, 1e-15);
    // Singular values of diag(1, 1/2).
    EXPECT_NEAR(tr.op_norm(I, Scale::V, Scale::H), 1.0, 1e-15);
    for (Scale from : kScales) {
        for (Scale to : kScales) {
            EXPECT_EQ(tr.op_norm(Matrix::Zero(2, 2), from, to), 0.0);
        }
    }
}

TEST(OpNorm, DimensionMismatch)
{
    const GelfandTriple tr = make_triple({1.0, 4.0}, 0.0);
    EXPECT_THROW(tr.op_norm(Matrix::Identity(3, 3), Scale::V, Scale::H), Error);
}

TEST(Scale, NamesRoundTrip)
{
    for (Scale s : kScales) {
        EXPECT_EQ(parse_scale(to_string(s)), s);
    }
    EXPECT_THROW(parse_scale("W"), Error);
}

GelfandTriple random_triple(Rng& rng, int m)
{
    std::uniform_real_distribution<double> step(0.0, 3.0);
    std::uniform_real_distribution<double> g(0.0, 0.99);
    std::vector<double> w{1.0 + step(rng)};
    for (int k = 1; k < m; ++k) {
        w.push_back(w.back() + step(rng) * w.back());
    }
    return make_triple(w, g(rng));
}

TEST(SpacesProperty, ScalesAreNested)
{
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const GelfandTriple tr = random_triple(rng, 1 + trial % 8);
        const Vector u = random_vector(rng, tr.dim());
        const double tol = 1e-14 * tr.norm(u, Scale::V);
        EXPECT_LE(tr.norm(u, Scale::VPrime), tr.norm(u, Scale::VPrimeGamma) + tol);
        EXPECT_LE(tr.norm(u, Scale::VPrimeGamma), tr.norm(u, Scale::H) + tol);
        EXPECT_LE(tr.norm(u, Scale::H), tr.norm(u, Scale::VGamma) + tol);
        EXPECT_LE(tr.norm(u, Scale::VGamma), tr.norm(u, Scale::V) + tol);
        EXPECT_LE(tr.norm(u, Scale::H), tr.c_H() * tr.norm(u, Scale::V) + tol);
    }
}

TEST(SpacesProperty, NormIsHomogeneousAndSubadditive)
{
    Rng rng(12);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 200; ++trial) {
        const GelfandTriple tr = random_triple(rng, 1 + trial % 6);
        const Vector u = random_vector(rng, tr.dim());
        const Vector v = random_vector(rng, tr.dim());
        const Complex c(n01(rng), n01(rng));
        for (Scale s : kScales) {
            const double nu = tr.norm(u, s);
            EXPECT_NEAR(tr.norm(c * u, s), std::abs(c) * nu, 1e-13 * (1.0 + std::abs(c) * nu));
            EXPECT_LE(tr.norm(u + v, s), nu + tr.norm(v, s) + 1e-13 * (nu + tr.norm(v, s)));
        }
    }
}

// Brute force: best ratio over random vectors, then ascent on the ratio by
// repeated application of the weighted normal operator from that start.
double brute_force_op_norm(const GelfandTriple& tr, const Matrix& A, Scale from, Scale to,
                           Rng& rng)
{
    const int m = tr.dim();
    double best = 0.0;
    Vector best_u = Vector::Zero(m);
    for (int i = 0; i < 10000; ++i) {
        const Vector u = random_vector(rng, m);
        const double r = tr.norm(A * u, to) / tr.norm(u, from);
        if (r > best) {
            best = r;
            best_u = u;
        }
    }
    // Gram operator of the ratio in coordinates: G u = D_from^{-2} A^* D_to^2 A u.
    const RealVector dt = tr.scale_diagonal(to);
    const RealVector df = tr.scale_diagonal(from);
    Vector u = best_u;
    for (int it = 0; it < 2000; ++it) {
        Vector w = dt.asDiagonal() * (A * u);
        w = dt.asDiagonal() * w;
        w = A.adjoint() * w;
        u = df.cwiseInverse().cwiseAbs2().asDiagonal() * w;
        u /= tr.norm(u, from);
        best = std::max(best, tr.norm(A * u, to));
    }
    return best;
}

TEST(SpacesProperty, OpNormMatchesBruteForce)
{
    Rng rng(13);
    for (int trial = 0; trial < 24; ++trial) {
        const int m = 1 + trial % 8;
        const GelfandTriple tr = random_triple(rng, m);
        const Matrix A = Matrix::Random(m, m);
        const Scale from = kScales[trial % 5];
        const Scale to = kScales[(trial / 5) % 5];
        const double exact = tr.op_norm(A, from, to);
        const double brute = brute_force_op_norm(tr, A, from, to, rng);
        EXPECT_LE(brute, exact * (1.0 + 1e-12));
        EXPECT_NEAR(brute, exact, 1e-6 * exact)
            << "m=" << m << " " << to_string(from) << "->" << to_string(to);
    }
}

TEST(Weights, Laplacian)
{
    const RealVector w = laplacian_weights(3);
    for (int k = 0; k < 3; ++k) {
        const double kp = (k + 1) * M_PI;
        EXPECT_NEAR(w[k], 1.0 + kp * kp, 1e-12);
    }
}

TEST(Weights, LogUniform)
{
    const RealVector w = log_uniform_weights(5, 1e8);
    EXPECT_DOUBLE_EQ(w[0], 1.0);
    EXPECT_NEAR(w[2], 1e4, 1e-8);
    EXPECT_NEAR(w[4], 1e8, 1e-4);
    EXPECT_THROW(log_uniform_weights(1, 10.0), Error);
    EXPECT_THROW(log_uniform_weights(3, 0.5), Error);
}

} // namespace
} // namespace formavg
