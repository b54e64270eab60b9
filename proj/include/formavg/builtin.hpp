// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_BUILTIN_HPP
#define FORMAVG_BUILTIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "formavg/forms.hpp"

namespace formavg
{

/// A(t) = diag(d_k s_k) with d_k alternating 1, 2. alpha = 1, M = 2, omega = 0.
FormFamily constant_family(const GelfandTriple& triple, double T);

/// A(t) = (1 + c t) S with c >= 0.
FormFamily affine_family(const GelfandTriple& triple, double slope, double T);

/// A(t) = (1 + t^beta / 2) S.
FormFamily holder_family(const GelfandTriple& triple, double beta, double T);

/// A(t) = S + kappa S^{1/2} K(t) S^{1/2} with K(t) skew-Hermitian, acting on
/// the mode pairs (2j, 2j+1) as [[0, z], [-conj(z), 0]], z = exp(i nu_j t),
/// nu_j = 1 + (j mod 2). Requires 0 <= kappa < 1 and at least two modes.
FormFamily rotating_family(const GelfandTriple& triple, double kappa, double T);

struct FamilyParams
{
    double beta = 0.75;
    double slope = 1.0;
    double kappa = 0.5;
};

/// Names: constant, affine, holder, rotating.
FormFamily make_family(const std::string& name, const GelfandTriple& triple,
                       const FamilyParams& params, double T);

const std::vector<std::string>& builtin_family_names();

/// Initial value presets: zero, first, smooth, random. Nonzero presets have
/// unit V norm.
Vector initial_preset(const std::string& name, const GelfandTriple& triple, std::uint64_t seed);

/// Forcing presets: zero, constant, oscillating, random. Nonzero presets have
/// unit L2(0,T;H) norm.
SourceData make_data(const std::string& u0_preset, const std::string& f_preset,
                     const GelfandTriple& triple, double T, std::uint64_t seed);

/// n pairs (u0, f) with |u0|_V^2 + |f|_{L2(0,T;H)}^2 = 1; f is a random
/// combination of the first three orthonormal Legendre polynomials on [0, T].
std::vector<SourceData> data_bank(int n, const GelfandTriple& triple, double T,
                                  std::uint64_t seed);

} // namespace formavg

#endif // FORMAVG_BUILTIN_HPP
