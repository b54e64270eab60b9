// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "formavg/builtin.hpp"
#include "formavg/error.hpp"
#include "formavg/forms.hpp"
#include "helpers.hpp"

namespace formavg
{
namespace
{

using test::diag;
using test::family;

constexpr double kPi = std::numbers::pi;

Matrix S_of(const GelfandTriple& tr)
{
    return tr.weights().cast<Complex>().asDiagonal();
}

TEST(EstimateConstants, InnerProductOfV)
{
    const GelfandTriple tr = make_triple({1.0, 4.0, 9.0}, 0.0);
    const Matrix S = S_of(tr);
    const FormFamily f = family(tr, [S](double) { return S; }, 1.0, 1.0, Modulus::zero(1.0), 1.0);
    const ConstantsReport c = estimate_constants(f, 5, 8, 1);
    EXPECT_NEAR(c.M_hat, 1.0, 1e-12);
    EXPECT_NEAR(c.alpha_hat, 1.0, 1e-12);
}

TEST(EstimateConstants, HermitianDiagonal)
{
    const GelfandTriple tr = make_triple({1.0, 1.0}, 0.0);
    const Matrix A = diag({2.0, 3.0});
    const FormFamily f = family(tr, [A](double) { return A; }, 3.0, 2.0, Modulus::zero(1.0), 1.0);
    const ConstantsReport c = estimate_constants(f, 3, 8, 1);
    EXPECT_NEAR(c.M_hat, 3.0, 1e-12);
    EXPECT_NEAR(c.alpha_hat, 2.0, 1e-12);
}

TEST(EstimateConstants, SineCoefficient)
{
    // min and max of 2 + sin t over [0, pi] are 2 (at the ends) and 3.
    const GelfandTriple tr = make_triple({1.0, 4.0}, 0.0);
    const Matrix S = S_of(tr);
    const FormFamily f = family(
        tr, [S](double t) { return Matrix((2.0 + std::sin(t)) * S); }, 3.0, 2.0,
        Modulus::scaled_power(1.0, 1.0, kPi), kPi);
    const ConstantsReport c = estimate_constants(f, 101, 4, 1);
    EXPECT_NEAR(c.M_hat, 3.0, 1e-12);
    EXPECT_NEAR(c.t_M, 0.5 * kPi, 1e-12);
    EXPECT_NEAR(c.alpha_hat, 2.0, 1e-12);
}

TEST(EstimateConstants, ViolationCarriesWitness)
{
    const GelfandTriple tr = make_triple({1.0, 1.0}, 0.0);
    const Matrix A = diag({2.0, 3.0});
    const FormFamily f = family(tr, [A](double) { return A; }, 2.5, 2.0, Modulus::zero(1.0), 1.0);
    try {
        estimate_constants(f, 3, 4, 1);
        FAIL() << "expected DeclaredConstantViolated";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DeclaredConstantViolated);
        ASSERT_TRUE(e.witness().has_value());
        EXPECT_EQ(e.witness()->x.size(), 2);
    }
}

TEST(VerifyDini, ConstantFormHasZeroRatio)
{
    const GelfandTriple tr = make_triple({1.0, 4.0}, 0.5);
    const FormFamily f = constant_family(tr, 1.0);
    EXPECT_EQ(verify_dini(f, 200, 3).max_ratio, 0.0);
}

TEST(VerifyDini, AffineRatioIsOne)
{
    const GelfandTriple tr = make_triple({1.0, 4.0, 25.0}, 0.5);
    const Matrix A0 = S_of(tr);
    const double c = tr.op_norm(A0, Scale::V, Scale::VPrimeGamma);
    const FormFamily f = family(
        tr, [A0](double t) { return Matrix((1.0 + t) * A0); }, 3.0, 1.0,
        Modulus::scaled_power(c, 1.0, 1.0), 1.0);
    EXPECT_NEAR(verify_dini(f, 300, 5).max_ratio, 1.0, 1e-9);
}

TEST(VerifyDini, HolderRatioAtMostOne)
{
    const GelfandTriple tr = make_triple({1.0, 4.0, 25.0}, 0.5);
    const Matrix A0 = S_of(tr);
    const double c = tr.op_norm(A0, Scale::V, Scale::VPrimeGamma);
    const FormFamily f = family(
        tr, [A0](double t) { return Matrix((1.0 + std::pow(t, 0.75)) * A0); }, 2.0, 1.0,
        Modulus::scaled_power(c, 0.75, 1.0), 1.0);
    const DiniReport r = verify_dini(f, 1000, 7);
    EXPECT_LE(r.max_ratio, 1.0 + 1e-9);
    EXPECT_GT(r.max_ratio, 0.9);
}

TEST(VerifyDini, ViolationCarriesWitness)
{
    const GelfandTriple tr = make_triple({1.0, 4.0}, 0.0);
    const Matrix A0 = S_of(tr);
    const FormFamily f = family(
        tr, [A0](double t) { return Matrix((1.0 + t) * A0); }, 2.0, 1.0,
        Modulus::scaled_power(0.5, 1.0, 1.0), 1.0);
    try {
        verify_dini(f, 50, 1);
        FAIL() << "expected DiniViolated";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DiniViolated);
        ASSERT_TRUE(e.witness().has_value());
        EXPECT_NE(e.witness()->t, e.witness()->s);
    }
}

TEST(DiniIntegral, Examples)
{
    EXPECT_NEAR(dini_integral(Modulus::power(0.75, 1.0), 0.5, 0.0, 0.02), 2.0 * std::sqrt(0.02),
                1e-12);
    EXPECT_NEAR(dini_integral(Modulus::power(0.75, 1.0), 0.5, 0.0, 0.02), 0.282843, 1e-6);
    EXPECT_EQ(dini_integral(Modulus::zero(1.0), 0.5, 0.0, 1.0), 0.0);
    EXPECT_NEAR(dini_integral(Modulus::power(1.0, 1.0), 0.0, 0.0, 0.37), 0.37, 1e-14);
}

TEST(DiniIntegral, DivergentPower)
{
    try {
        dini_integral(Modulus::power(0.2, 1.0), 0.5, 0.0, 1.0);
        FAIL() << "expected DivergentIntegral";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DivergentIntegral);
    }
}

TEST(DiniIntegral, AdditiveOverAdjacentIntervals)
{
    const Modulus mods[] = {
        Modulus::power(0.75, 1.0), Modulus::scaled_power(3.0, 0.6, 2.0),
        Modulus::tabulated({{0.0, 0.0}, {0.1, 0.2}, {0.5, 0.3}, {1.0, 0.9}}, 1.0)};
    for (const Modulus& m : mods) {
        const double T = m.horizon();
        for (double g : {0.0, 0.5}) {
            const double whole = dini_integral(m, g, 0.0, 2.0 * T);
            const double parts = dini_integral(m, g, 0.0, 0.3 * T) +
                                 dini_integral(m, g, 0.3 * T, 1.1 * T) +
                                 dini_integral(m, g, 1.1 * T, 2.0 * T);
            EXPECT_NEAR(whole, parts, 1e-9) << m.describe();
        }
    }
}

TEST(SupRatio, Examples)
{
    EXPECT_NEAR(sup_ratio(Modulus::power(0.75, 1.0), 0.5), 1.0, 1e-14);
    EXPECT_NEAR(sup_ratio(Modulus::power(0.25, 1.0), 0.5), 1.0, 1e-14);
    EXPECT_EQ(sup_ratio(Modulus::zero(1.0), 0.5), 0.0);
    try {
        sup_ratio(Modulus::power(0.2, 1.0), 0.5);
        FAIL() << "expected Unbounded";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Unbounded);
    }
}

TEST(Modulus, ExtensionHoldsValuePastHorizon)
{
    const Modulus m = Modulus::power(0.75, 1.0);
    EXPECT_DOUBLE_EQ(m(1.5), 1.0);
    EXPECT_DOUBLE_EQ(m(2.0), 1.0);
    const Modulus tab = Modulus::tabulated({{0.0, 0.0}, {0.5, 1.0}, {1.0, 1.5}}, 1.0);
    EXPECT_DOUBLE_EQ(tab(0.25), 0.5);
    EXPECT_DOUBLE_EQ(tab(1.7), 1.5);
    EXPECT_THROW(Modulus::tabulated({{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.5}}, 1.0), Error);
    EXPECT_THROW(Modulus::tabulated({{0.1, 0.0}, {0.5, 1.0}}, 1.0), Error);
}

TEST(RelativeContinuity, ConstantFormHasZeroEta)
{
    const FormFamily f = constant_family(make_triple({1.0, 4.0, 9.0}, 0.0), 1.0);
    EXPECT_EQ(relative_continuity_profile(f, 0.1, 0.2, 16, 1), 0.0);
}

TEST(RelativeContinuity, AffineWithinEpsilonWindow)
{
    const GelfandTriple tr = make_triple({1.0, 4.0, 9.0}, 0.0);
    const Matrix A0 = S_of(tr);
    const double C = tr.op_norm(A0, Scale::V, Scale::VPrime);
    const FormFamily f = family(
        tr, [A0](double t) { return Matrix((1.0 + t) * A0); }, 2.0, 1.0,
        Modulus::scaled_power(C, 1.0, 1.0), 1.0);
    const double eps = 0.2;
    EXPECT_NEAR(relative_continuity_profile(f, eps, eps / C, 16, 1), 0.0, 1e-12);
}

TEST(RelativeContinuity, IdentityAffineEtaIsOne)
{
    const GelfandTriple tr = make_triple({1.0, 1.0}, 0.0);
    const FormFamily f = family(
        tr, [](double t) { return Matrix((1.0 + t) * Matrix::Identity(2, 2)); }, 2.0, 1.0,
        Modulus::scaled_power(1.0, 1.0, 1.0), 1.0);
    EXPECT_NEAR(relative_continuity_profile(f, 0.0, 1.0, 16, 1), 1.0, 1e-9);
}

class BuiltinFamilies : public ::testing::TestWithParam<std::string>
{
};

TEST_P(BuiltinFamilies, PassCheckers)
{
    const GelfandTriple tr(laplacian_weights(8), 0.5);
    const FormFamily f = make_family(GetParam(), tr, FamilyParams{}, 1.0);
    EXPECT_NO_THROW(estimate_constants(f, 33, 16, 2));
    EXPECT_LE(verify_dini(f, 500, 2).max_ratio, 1.0 + 1e-9);
    EXPECT_TRUE(std::isfinite(dini_integral(f.modulus, tr.gamma(), 0.0, 1.0)));
}

TEST_P(BuiltinFamilies, LaxMilgramAtMatrixLevel)
{
    const GelfandTriple tr(laplacian_weights(8), 0.5);
    const FormFamily f = make_family(GetParam(), tr, FamilyParams{}, 1.0);
    Rng rng(4);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const Matrix A = f(unif(rng));
        const Eigen::PartialPivLU<Matrix> lu(A);
        const Matrix Ainv = lu.inverse();
        ASSERT_TRUE(Ainv.allFinite());
        EXPECT_LE(tr.op_norm(Ainv, Scale::VPrime, Scale::V), (1.0 / f.alpha) * (1.0 + 1e-10));
    }
}

TEST_P(BuiltinFamilies, DiniRatioIgnoresConstantShift)
{
    const GelfandTriple tr(laplacian_weights(6), 0.5);
    FormFamily f = make_family(GetParam(), tr, FamilyParams{}, 1.0);
    const DiniReport before = verify_dini(f, 300, 9);
    const Matrix shift = 3.0 * S_of(tr);
    const auto base = f.assemble;
    f.assemble = [base, shift](double t) { return Matrix(base(t) + shift); };
    f.M += 3.0;
    f.alpha += 3.0;
    const DiniReport after = verify_dini(f, 300, 9);
    EXPECT_NEAR(before.max_ratio, after.max_ratio, 1e-9);
}

INSTANTIATE_TEST_SUITE_P(All, BuiltinFamilies,
                         ::testing::Values("constant", "affine", "holder", "rotating"));

TEST(Builtin, UnknownNamesAreRejected)
{
    const GelfandTriple tr(laplacian_weights(4), 0.0);
    EXPECT_THROW(make_family("quadratic", tr, FamilyParams{}, 1.0), Error);
    EXPECT_THROW(initial_preset("spiky", tr, 1), Error);
    EXPECT_THROW(make_data("smooth", "pulse", tr, 1.0, 1), Error);
}

TEST(Builtin, PresetsHaveUnitNorm)
{
    const GelfandTriple tr(laplacian_weights(6), 0.0);
    for (const char* name : {"first", "smooth", "random"}) {
        EXPECT_NEAR(tr.norm(initial_preset(name, tr, 5), Scale::V), 1.0, 1e-14) << name;
    }
    for (const char* name : {"constant", "oscillating", "random"}) {
        const SourceData d = make_data("zero", name, tr, 2.0, 5);
        // Gauss-Legendre on a fine composite grid.
        double sum = 0.0;
        const int cells = 200;
        const double xs[] = {-std::sqrt(3.0 / 5.0), 0.0, std::sqrt(3.0 / 5.0)};
        const double ws[] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        for (int c = 0; c < cells; ++c) {
            const double h = 2.0 / cells;
            for (int q = 0; q < 3; ++q) {
                const double t = (c + 0.5) * h + 0.5 * h * xs[q];
                sum += 0.5 * h * ws[q] * d.f(t).squaredNorm();
            }
        }
        EXPECT_NEAR(std::sqrt(sum), 1.0, 1e-9) << name;
    }
}

TEST(Builtin, DataBankIsNormalized)
{
    const GelfandTriple tr(laplacian_weights(5), 0.0);
    const auto bank = data_bank(20, tr, 1.0, 3);
    ASSERT_EQ(bank.size(), 20u);
    for (const auto& d : bank) {
        double f2 = 0.0;
        const int n = 4000;
        for (int i = 0; i < n; ++i) {
            f2 += d.f((i + 0.5) / n).squaredNorm() / n;
        }
        EXPECT_NEAR(std::pow(tr.norm(d.u0, Scale::V), 2) + f2, 1.0, 1e-6);
    }
}

} // namespace
} // namespace formavg
