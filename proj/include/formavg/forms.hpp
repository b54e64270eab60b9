// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_FORMS_HPP
#define FORMAVG_FORMS_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "formavg/modulus.hpp"
#include "formavg/spaces.hpp"
#include "formavg/types.hpp"

namespace formavg
{

/// Time-dependent form a(t,u,v) = <A(t)u, v> given by its coordinate matrix.
struct FormFamily
{
    std::string name;
    GelfandTriple triple;
    std::function<Matrix(double)> assemble;
    double M = 1.0;
    double alpha = 1.0;
    Modulus modulus;
    double T = 1.0;
    /// The assemble map may be evaluated on (T, 2T].
    bool defined_beyond_horizon = false;

    /// A(t) for t in [0, T].
    Matrix operator()(double t) const;
    /// A(t) for t in [0, 2T]; requires defined_beyond_horizon past T.
    Matrix extended(double t) const;
    int dim() const noexcept { return triple.dim(); }
    double gamma() const noexcept { return triple.gamma(); }
};

/// Initial value and H-valued inhomogeneity.
struct SourceData
{
    Vector u0;
    /// Null means f = 0.
    std::function<Vector(double)> f;
    /// Interior times where f may jump.
    std::vector<double> breakpoints;

    Vector forcing(double t) const;
    bool has_forcing() const noexcept { return static_cast<bool>(f); }
};

using Rng = std::mt19937_64;

/// Complex vector with independent standard normal real and imaginary parts.
Vector random_vector(Rng& rng, int m);
/// Random vector of unit norm in the given scale.
Vector random_unit(Rng& rng, const GelfandTriple& triple, Scale scale);

struct ConstantsReport
{
    double M_hat = 0.0;
    double alpha_hat = 0.0;
    double t_M = 0.0;
    double t_alpha = 0.0;
};

/// Sampled boundedness and coercivity constants. Times are n_time equally
/// spaced points of [0, T]; n_vec random pairs per time cross-check the
/// exact values from below.
ConstantsReport estimate_constants(const FormFamily& form, int n_time, int n_vec,
                                   std::uint64_t seed);

/// Same check for a single matrix against given constants.
ConstantsReport check_matrix_constants(const GelfandTriple& triple, const Matrix& A, double M,
                                       double alpha, double t = 0.0);

struct DiniReport
{
    double max_ratio = 0.0;
    double t = 0.0;
    double s = 0.0;
    int pairs = 0;
};

DiniReport verify_dini(const FormFamily& form, int n_pairs, std::uint64_t seed);

/// Integral of omega(s) / s^{1 + gamma/2} over [a, b], 0 <= a < b.
double dini_integral(const Modulus& modulus, double gamma, double a, double b);

/// Supremum of omega(t) / t^{gamma/2} over (0, T].
double sup_ratio(const Modulus& modulus, double gamma);

/// Sampled estimate of the smallest eta with
/// |(A(t)-A(s))x|_{V'} <= eps |x|_V + eta |x|_{V'} for |t-s| <= delta.
double relative_continuity_profile(const FormFamily& form, double epsilon, double delta,
                                   int n_samples, std::uint64_t seed);

} // namespace formavg

#endif // FORMAVG_FORMS_HPP
