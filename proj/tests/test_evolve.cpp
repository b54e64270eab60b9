// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "formavg/builtin.hpp"
#include "formavg/discretize.hpp"
#include "formavg/error.hpp"
#include "formavg/evolve.hpp"
#include "formavg/linalg.hpp"
#include "helpers.hpp"

namespace formavg
{
namespace
{

using test::diag;
using test::scalar;
using test::scalar_vector;

double re(const Vector& v)
{
    return v[0].real();
}

FormFamily scalar_affine()
{
    return scalar([](double t) { return 1.0 + t; }, 2.0, 1.0,
                  Modulus::scaled_power(1.0, 1.0, 1.0), 1.0);
}

SourceData unit_scalar()
{
    return SourceData{scalar_vector(1.0), nullptr, {}};
}

TEST(Solve, ScalarExponential)
{
    const Trajectory u = solve([](double) { return Matrix::Ones(1, 1); }, unit_scalar(), 1.0,
                               1e-10, 32);
    EXPECT_NEAR(re(u.values.back().col(0)), std::exp(-1.0), 1e-9);
    EXPECT_NEAR(re(u.values.back().col(0)), 0.367879, 1e-6);
    EXPECT_EQ(u.values.front()(0, 0), Complex(1.0, 0.0));
}

TEST(Solve, ScalarAffineClosedForm)
{
    const FormFamily f = scalar_affine();
    const Trajectory u = solve(f.assemble, unit_scalar(), 1.0, 1e-10, 64);
    for (std::size_t j = 0; j < u.grid.size(); ++j) {
        const double t = u.grid.times[j];
        EXPECT_NEAR(re(u.value(j)), std::exp(-t - 0.5 * t * t), 1e-8) << "t=" << t;
    }
    EXPECT_NEAR(re(u.values.back().col(0)), 0.223130, 1e-6);
}

TEST(Solve, ShiftedInterpolationClosedForm)
{
    const FormFamily f = scalar_affine();
    const InterpolatedFamily fam = discretize(f, 9, 8, Extension::Continue);
    const double h = fam.mesh();
    SolverOptions opt;
    opt.tol = 1e-11;
    const Trajectory ul = solve(path_of(fam), unit_scalar(),
                                make_time_grid(GridSpec{1.0, 64, fam.kinks()}), opt);
    for (std::size_t j = 0; j < ul.grid.size(); ++j) {
        const double t = ul.grid.times[j];
        EXPECT_NEAR(re(ul.value(j)), std::exp(-t - 0.5 * t * t - 0.5 * h * t), 1e-9);
    }
    const double gap = std::exp(-1.5) * (1.0 - std::exp(-0.5 * h));
    const double exact_end = std::exp(-1.5);
    EXPECT_NEAR(exact_end - re(ul.values.back().col(0)), gap, 1e-9);
}

TEST(Solve, DerivativesSatisfyTheEquation)
{
    const GelfandTriple tr(laplacian_weights(6), 0.5);
    const FormFamily f = make_family("rotating", tr, FamilyParams{}, 1.0);
    const SourceData data = make_data("smooth", "oscillating", tr, 1.0, 4);
    SolverOptions opt;
    opt.tol = 1e-10;
    const Trajectory u = solve(path_of(f), data, make_time_grid(GridSpec{1.0, 32, {}}), opt);
    EXPECT_LE((u.value(0) - data.u0).norm(), 0.0);
    for (std::size_t j = 0; j < u.grid.size(); ++j) {
        const double t = u.grid.times[j];
        const Vector r = u.deriv(j) + f(t) * u.value(j) - data.forcing(t);
        EXPECT_LE(r.norm(), 1e-12 * (1.0 + (f(t) * u.value(j)).norm()));
    }
}

TEST(Solve, RejectsToleranceOutOfRange)
{
    EXPECT_THROW(solve([](double) { return Matrix::Ones(1, 1); }, unit_scalar(), 1.0, 1e-3, 8),
                 Error);
    EXPECT_THROW(solve([](double) { return Matrix::Ones(1, 1); }, unit_scalar(), 1.0, 1e-15, 8),
                 Error);
}

TEST(Solve, StiffProblemUsesImplicitFallback)
{
    const Matrix A = diag({1.0, 1e8});
    SourceData data{Vector::Ones(2), nullptr, {}};
    SolverOptions opt;
    opt.tol = 1e-10;
    const Trajectory u = solve(path_of([A](double) { return A; }, 1.0, 2), data,
                               make_time_grid(GridSpec{1.0, 16, {}}), opt);
    EXPECT_EQ(u.stats.used, Method::Implicit);
    EXPECT_NEAR(u.values.back()(0, 0).real(), std::exp(-1.0), 1e-8);
    EXPECT_LE(std::abs(u.values.back()(1, 0)), 1e-12);

    opt.method = Method::Explicit;
    EXPECT_THROW(solve(path_of([A](double) { return A; }, 1.0, 2), data,
                       make_time_grid(GridSpec{1.0, 16, {}}), opt),
                 Error);
}

TEST(Solve, HalvingToleranceDoesNotIncreaseError)
{
    const FormFamily f = scalar_affine();
    double prev = 1.0;
    for (double tol : {1e-6, 5e-7, 2.5e-7, 1e-7, 1e-8, 1e-9, 1e-10}) {
        const Trajectory u = solve(f.assemble, unit_scalar(), 1.0, tol, 32);
        double err = 0.0;
        for (std::size_t j = 0; j < u.grid.size(); ++j) {
            const double t = u.grid.times[j];
            err = std::max(err, std::abs(re(u.value(j)) - std::exp(-t - 0.5 * t * t)));
        }
        EXPECT_LE(err, std::max(prev, 1e-13)) << "tol=" << tol;
        prev = err;
        if (tol == 1e-10) {
            EXPECT_LE(err, 1e-8);
        }
    }
}

TEST(ReferenceSolve, ConstantFamilyMatchesSolve)
{
    const GelfandTriple tr(laplacian_weights(4), 0.0);
    const FormFamily f = constant_family(tr, 1.0);
    const SourceData data = make_data("smooth", "zero", tr, 1.0, 1);
    const TimeGrid grid = make_time_grid(GridSpec{1.0, 16, {}});
    const Trajectory a = reference_solve(f, data, grid);
    SolverOptions opt;
    opt.tol = 1e-12;
    const Trajectory b = solve(path_of(f.assemble, 1.0, 4), data, grid, opt);
    EXPECT_LE(mr_error(a, b, tr).c0V, 1e-12);
    // Diagonal constant family: closed form per mode.
    const Matrix A = f(0.0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double t = grid.times[j];
        for (int k = 0; k < 4; ++k) {
            const Complex expect = std::exp(-t * A(k, k)) * data.u0[k];
            EXPECT_LE(std::abs(a.value(j)[k] - expect), 1e-11 * (1.0 + std::abs(data.u0[k])));
        }
    }
}

TEST(ReferenceSolve, ManufacturedSolution)
{
    const GelfandTriple tr(laplacian_weights(5), 0.5);
    const FormFamily f = make_family("holder", tr, FamilyParams{}, 1.0);
    const Vector c = initial_preset("smooth", tr, 1);
    // g(t) = cos(3t) c + t^2 e_1, so g(0) = c.
    auto g = [c](double t) {
        Vector v = std::cos(3.0 * t) * c;
        v[0] += t * t;
        return v;
    };
    auto gdot = [c](double t) {
        Vector v = -3.0 * std::sin(3.0 * t) * c;
        v[0] += 2.0 * t;
        return v;
    };
    SourceData data{c, [f, g, gdot](double t) { return Vector(f(t) * g(t) + gdot(t)); }, {}};
    const Trajectory u = reference_solve(f, data, make_time_grid(GridSpec{1.0, 16, {}}));
    for (std::size_t j = 0; j < u.grid.size(); ++j) {
        EXPECT_LE(tr.norm(u.value(j) - g(u.grid.times[j]), Scale::H), 1e-10);
    }
}

TEST(MrError, IdenticalTrajectoriesGiveZero)
{
    const FormFamily f = scalar_affine();
    const Trajectory u = solve(f.assemble, unit_scalar(), 1.0, 1e-10, 16);
    const NormReport r = mr_error(u, u, f.triple);
    EXPECT_EQ(r.l2V, 0.0);
    EXPECT_EQ(r.h1H, 0.0);
    EXPECT_EQ(r.mr, 0.0);
    EXPECT_EQ(r.c0V, 0.0);
}

TEST(MrError, ZeroTrajectoryGivesOwnNorms)
{
    const FormFamily f = scalar_affine();
    const Trajectory u = solve(f.assemble, unit_scalar(), 1.0, 1e-10, 16);
    Trajectory zero = u;
    for (auto& v : zero.values) {
        v.setZero();
    }
    for (auto& d : zero.derivs) {
        d.setZero();
    }
    const NormReport a = mr_error(u, zero, f.triple);
    const NormReport b = norms(u, f.triple);
    EXPECT_DOUBLE_EQ(a.mr, b.mr);
    EXPECT_DOUBLE_EQ(a.c0V, b.c0V);
    EXPECT_DOUBLE_EQ(a.mr, a.l2V + a.h1H);
    // Closed forms: int_0^1 e^{-2t-t^2} dt and int (1+t)^2 e^{-2t-t^2} dt.
    double l2 = 0.0;
    double d2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n;
        const double e = std::exp(-2.0 * t - t * t);
        l2 += e / n;
        d2 += (1.0 + t) * (1.0 + t) * e / n;
    }
    EXPECT_NEAR(b.l2V, std::sqrt(l2), 1e-8);
    EXPECT_NEAR(b.h1H, std::sqrt(l2 + d2), 1e-8);
    EXPECT_NEAR(b.c0V, 1.0, 1e-15);
}

TEST(MrError, AffineSupAgainstBruteForce)
{
    const FormFamily f = scalar_affine();
    const InterpolatedFamily fam = discretize(f, 9, 8, Extension::Continue);
    const TimeGrid grid = make_time_grid(GridSpec{1.0, 128, fam.kinks()});
    SolverOptions opt;
    opt.tol = 1e-11;
    const Trajectory u = reference_solve(f, unit_scalar(), grid);
    const Trajectory ul = solve(path_of(fam), unit_scalar(), grid, opt);
    const NormReport r = mr_error(u, ul, f.triple);
    double brute = 0.0;
    for (int i = 0; i <= 1000000; ++i) {
        const double t = i * 1e-6;
        brute = std::max(brute, std::exp(-t - 0.5 * t * t) * (1.0 - std::exp(-0.05 * t)));
    }
    EXPECT_LE(r.c0H, brute + 1e-10);
    EXPECT_NEAR(r.c0H, brute, 1e-5 * brute);
}

TEST(MrError, ResamplesOntoFirstGrid)
{
    const FormFamily f = scalar_affine();
    const Trajectory a = solve(f.assemble, unit_scalar(), 1.0, 1e-11, 32);
    const Trajectory b = solve(f.assemble, unit_scalar(), 1.0, 1e-11, 8);
    EXPECT_LE(mr_error(a, b, f.triple).mr, 1e-9);
}

class EnergyTest : public ::testing::TestWithParam<std::string>
{
};

TEST_P(EnergyTest, NormIsNonincreasingWithoutForcing)
{
    const GelfandTriple tr(laplacian_weights(8), 0.5);
    const FormFamily f = make_family(GetParam(), tr, FamilyParams{}, 1.0);
    const SourceData data = make_data("random", "zero", tr, 1.0, 11);
    const Trajectory u = reference_solve(f, data, make_time_grid(GridSpec{1.0, 64, {}}), 1e-11);
    double prev = tr.norm(u.value(0), Scale::H);
    for (std::size_t j = 1; j < u.grid.size(); ++j) {
        const double n = tr.norm(u.value(j), Scale::H);
        EXPECT_LE(n, prev * (1.0 + 1e-9)) << "t=" << u.grid.times[j];
        prev = n;
    }
}

TEST_P(EnergyTest, UniformH1BoundAcrossMeshes)
{
    const GelfandTriple tr(laplacian_weights(6), 0.5);
    const FormFamily f = make_family(GetParam(), tr, FamilyParams{}, 1.0);
    const SourceData data = make_data("smooth", "oscillating", tr, 1.0, 2);
    const double size = tr.norm(data.u0, Scale::V) + 1.0;
    const TimeGrid grid = make_time_grid(GridSpec{1.0, 64, data.breakpoints});
    const double exact = norms(reference_solve(f, data, grid, 1e-10), tr).h1H / size;
    SolverOptions opt;
    opt.tol = 1e-9;
    double worst = 0.0;
    for (int k = 3; k <= 9; ++k) {
        const InterpolatedFamily fam = discretize(f, (1 << k) - 1);
        const Trajectory ul = solve(path_of(fam), data, grid, opt);
        worst = std::max(worst, norms(ul, tr).h1H / size);
    }
    EXPECT_LE(worst, 1.5 * exact);
}

INSTANTIATE_TEST_SUITE_P(All, EnergyTest,
                         ::testing::Values("constant", "affine", "holder", "rotating"));

TEST(AtTerms, ConstantFamilyWithoutForcing)
{
    const GelfandTriple tr(laplacian_weights(4), 0.0);
    const FormFamily f = constant_family(tr, 1.0);
    const InterpolatedFamily fam = discretize(f, 7);
    const SourceData data = make_data("smooth", "zero", tr, 1.0, 1);
    SolverOptions opt;
    opt.tol = 1e-11;
    const Trajectory ul = solve(path_of(fam), data, make_time_grid(GridSpec{1.0, 32, {}}), opt);
    const RepresentationTerms r = at_terms(fam, data, ul, tr);
    EXPECT_LE(r.residual, 1e-9);
    const Matrix A = f(0.0);
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        const Vector u1 = expm(Matrix(-r.times[i] * A)) * data.u0;
        EXPECT_LE((r.u1[i] - u1).norm(), 1e-12);
        EXPECT_LE(r.u2[i].norm(), 1e-14);
        EXPECT_LE(r.u3[i].norm(), 1e-14);
    }
}

TEST(AtTerms, ConstantFamilyDuhamel)
{
    const GelfandTriple tr(laplacian_weights(4), 0.0);
    const FormFamily f = constant_family(tr, 1.0);
    const InterpolatedFamily fam = discretize(f, 7);
    const Vector c = initial_preset("first", tr, 1) + initial_preset("smooth", tr, 1);
    const SourceData data{Vector::Zero(4), [c](double) { return c; }, {}};
    SolverOptions opt;
    opt.tol = 1e-11;
    const Trajectory ul = solve(path_of(fam), data, make_time_grid(GridSpec{1.0, 32, {}}), opt);
    const RepresentationTerms r = at_terms(fam, data, ul, tr);
    const Matrix A = f(0.0);
    const Matrix I = Matrix::Identity(4, 4);
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        const Vector u2 = A.inverse() * (I - expm(Matrix(-r.times[i] * A))) * c;
        EXPECT_LE((r.u2[i] - u2).norm(), 1e-10 * (1.0 + u2.norm()));
        EXPECT_LE(r.u3[i].norm(), 1e-14);
    }
    EXPECT_LE(r.residual, 1e-9);
}

TEST(AtTerms, ScalarAffine)
{
    const FormFamily f = scalar_affine();
    const InterpolatedFamily fam = discretize(f, 9, 8, Extension::Continue);
    const double h = fam.mesh();
    SolverOptions opt;
    opt.tol = 1e-11;
    const Trajectory ul = solve(path_of(fam), unit_scalar(),
                                make_time_grid(GridSpec{1.0, 32, fam.kinks()}), opt);
    const RepresentationTerms r = at_terms(fam, unit_scalar(), ul, f.triple);
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        const double t = r.times[i];
        EXPECT_NEAR(re(r.u1[i]), std::exp(-t * (1.0 + t + 0.5 * h)), 1e-12);
        EXPECT_EQ(r.u2[i].norm(), 0.0);
        const double ul_t = std::exp(-t - 0.5 * t * t - 0.5 * h * t);
        EXPECT_NEAR(re(r.u3[i]), ul_t - re(r.u1[i]), 1e-9);
    }
    EXPECT_LE(r.residual, 1e-9);
}

class RepresentationTest : public ::testing::TestWithParam<std::string>
{
};

TEST_P(RepresentationTest, ResidualWithinCombinedTolerance)
{
    const GelfandTriple tr(laplacian_weights(8), 0.5);
    const FormFamily f = make_family(GetParam(), tr, FamilyParams{}, 1.0);
    const InterpolatedFamily fam = discretize(f, 7);
    const SourceData data = make_data("smooth", "oscillating", tr, 1.0, 3);
    SolverOptions opt;
    opt.tol = 1e-11;
    std::vector<double> cuts = fam.kinks();
    cuts.insert(cuts.end(), data.breakpoints.begin(), data.breakpoints.end());
    const Trajectory ul = solve(path_of(fam), data, make_time_grid(GridSpec{1.0, 32, cuts}), opt);
    const RepresentationTerms r = at_terms(fam, data, ul, tr, 8);
    EXPECT_LE(r.residual, 10.0 * (opt.tol + std::max(r.quadrature_change, 1e-11)));
}

INSTANTIATE_TEST_SUITE_P(All, RepresentationTest,
                         ::testing::Values("constant", "affine", "holder", "rotating"));

TEST(QNorm, ConstantFamilyVanishes)
{
    const FormFamily f = constant_family(GelfandTriple(laplacian_weights(4), 0.5), 1.0);
    const InterpolatedFamily fam = discretize(f, 9);
    for (double mu : {0.0, 10.0}) {
        EXPECT_LE(q_norm(fam, mu, 32), 1e-14);
    }
    EXPECT_LE(p_norm(fam, 0.0, 32), 1e-14);
}

TEST(QNorm, ScalarAffineDecaysInMu)
{
    const InterpolatedFamily fam = discretize(scalar_affine(), 9, 8, Extension::Continue);
    const VolterraEstimate q0 = q_norm_estimate(fam, 0.0, 128);
    const VolterraEstimate q100 = q_norm_estimate(fam, 100.0, 128);
    EXPECT_LT(q100.value, q0.value);
    EXPECT_LT(q0.change, 0.05);
    EXPECT_LT(q100.change, 0.05);
    double prev = q0.value;
    for (double mu : {1.0, 10.0, 100.0, 1000.0}) {
        const double q = q_norm(fam, mu, 128);
        EXPECT_LE(q, 1.02 * prev) << "mu=" << mu;
        prev = q;
    }
}

TEST(QNorm, KernelNarrowerThanGridCell)
{
    // At mu = 1000 the kernel width 1/mu is far below T/32.
    const GelfandTriple tr(laplacian_weights(4), 0.5);
    const InterpolatedFamily fam = discretize(make_family("affine", tr, FamilyParams{}, 1.0), 9);
    const double coarse = q_norm(fam, 1000.0, 32);
    const double fine = q_norm(fam, 1000.0, 512);
    EXPECT_NEAR(coarse / fine, 1.0, 0.03);
}

TEST(QNorm, RotatingNonincreasingInMu)
{
    const GelfandTriple tr(laplacian_weights(6), 0.5);
    const InterpolatedFamily fam =
        discretize(make_family("rotating", tr, FamilyParams{}, 1.0), 9);
    double prev = q_norm(fam, 0.0, 64);
    for (double mu : {1.0, 10.0, 100.0, 1000.0}) {
        const double q = q_norm(fam, mu, 64);
        EXPECT_LE(q, 1.02 * prev) << "mu=" << mu;
        prev = q;
    }
}

TEST(PNorm, ScalarAffineLargeShift)
{
    const InterpolatedFamily fam = discretize(scalar_affine(), 9, 8, Extension::Continue);
    const VolterraEstimate p = p_norm_estimate(fam, 100.0, 128);
    EXPECT_LE(p.value, 0.5);
    EXPECT_LE(p.value, p.upper * (1.0 + 1e-12));
    EXPECT_LT(p.change, 0.05);
}

TEST(Volterra, RejectsNegativeShift)
{
    const InterpolatedFamily fam = discretize(scalar_affine(), 3);
    EXPECT_THROW(q_norm(fam, -1.0, 32), Error);
    EXPECT_THROW(p_norm(fam, -1.0, 32), Error);
}

} // namespace
} // namespace formavg
