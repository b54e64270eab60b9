// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_QUADRATURE_HPP
#define FORMAVG_QUADRATURE_HPP

#include <functional>
#include <vector>

#include "formavg/types.hpp"

namespace formavg
{

struct GaussRule
{
    std::vector<double> nodes;   // on [-1, 1], increasing
    std::vector<double> weights; // sum to 2
};

/// Gauss-Legendre rule with `order` points. Rules are cached.
const GaussRule& gauss_legendre(int order);

/// Scalar integral over [a, b] by tanh-sinh; tolerates integrable endpoint
/// singularities. Throws QuadratureNotConverged when the error estimate
/// exceeds abs_tol.
double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol);

/// Mean-value integral of a matrix function over [a, b] using composite
/// Gauss-Legendre with adaptive bisection. A panel is accepted when the
/// one-panel and two-panel results agree entrywise to abs_tol.
Matrix integrate_matrix(const std::function<Matrix(double)>& f, double a, double b, int order,
                        double abs_tol, int max_depth = 30);

/// Least-squares slope and intercept of y against x.
struct LineFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// n points log-spaced in [a, b], endpoints included.
std::vector<double> logspace(double a, double b, int n);

/// n points equally spaced in [a, b], endpoints included.
std::vector<double> linspace(double a, double b, int n);

} // namespace formavg

#endif // FORMAVG_QUADRATURE_HPP
