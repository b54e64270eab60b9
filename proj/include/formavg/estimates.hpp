// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_ESTIMATES_HPP
#define FORMAVG_ESTIMATES_HPP

#include <string>
#include <vector>

#include "formavg/discretize.hpp"
#include "formavg/forms.hpp"

namespace formavg
{

/// Sampling of the resolvent set outside the sector |arg z| < theta.
struct SectorGeometry
{
    double theta = 0.0;
    double margin = 0.05;
    std::vector<double> rays;
    std::vector<double> radii;
};

/// theta = pi/2 - arctan(M/alpha); rays pi and +-(theta + margin); radii
/// log-spaced in [1, 1e6].
SectorGeometry sector_geometry(double M, double alpha, double margin = 0.05, int n_radii = 40);

struct FitResult
{
    double slope = 0.0;
    double constant = 0.0;
    double max_ratio = 0.0;
    double r2 = 1.0;
};

struct ResolventEstimate
{
    Scale from = Scale::H;
    Scale to = Scale::H;
    double exponent = 0.0; // expected decay exponent
    double ray = 0.0;
    FitResult fit;
};

/// Norms of (lambda - A)^{-1} between five scale pairs along each ray.
/// Slopes are fitted on |lambda| >= fit_from; max_ratio is the largest
/// norm * (1 + |lambda|)^exponent.
std::vector<ResolventEstimate> resolvent_suite(const Matrix& A, const GelfandTriple& triple,
                                               const SectorGeometry& geometry,
                                               double fit_from = 1e3);

struct SemigroupEstimate
{
    int item = 0;
    std::string name;
    double exponent = 0.0;
    double s_at = 0.0;
    FitResult fit; // constant = max_ratio = sup_s norm * s^exponent
};

/// Items 6..10: e^{-sA} from V'_gamma to H and to V, from V' to V,
/// A e^{-sA} on H, e^{-sA} on V.
std::vector<SemigroupEstimate> semigroup_suite(const Matrix& A, const GelfandTriple& triple,
                                               const std::vector<double>& s_samples);

struct SqrtBounds
{
    double lower = 0.0;
    double upper = 0.0;
    double residual = 0.0;
};

/// Extreme values of |A^{1/2} u|_H / |u|_V. Throws SqrtResidualTooLarge
/// when the computed root misses A by more than 1e-10 relative.
SqrtBounds sqrt_check(const Matrix& A, const GelfandTriple& triple);

struct SolutionOperatorGap
{
    double mesh = 0.0;
    double gap_inhom = 0.0;
    double gap_full = 0.0;
    double bracket = 0.0;
};

/// Operator-norm distance between the discrete solution maps of the exact
/// and interpolated families, measured into the Hilbertian MR norm
/// (|u|_{L2 V}^2 + |u|_{L2 H}^2 + |u'|_{L2 H}^2)^{1/2}. Inputs are unit
/// V-norm coordinate initial values and unit L2-norm sources constant on
/// n_grid cells.
SolutionOperatorGap solution_operator_gap(const FormFamily& form, const InterpolatedFamily& fam,
                                          int n_grid, double tol);

/// Same for several subdivisions n, sharing one reference solve.
std::vector<SolutionOperatorGap> solution_operator_gaps(const FormFamily& form,
                                                        const std::vector<int>& ns, int n_grid,
                                                        double tol);

} // namespace formavg

#endif // FORMAVG_ESTIMATES_HPP
