// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_EVOLVE_HPP
#define FORMAVG_EVOLVE_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "formavg/discretize.hpp"
#include "formavg/forms.hpp"

namespace formavg
{

/// t -> A(t) on [0, T] together with the points where it is not smooth.
struct OperatorPath
{
    std::function<Matrix(double)> eval;
    std::vector<double> kinks;
    std::string id;
    double T = 1.0;
    int dim = 1;
};

OperatorPath path_of(const FormFamily& form);
OperatorPath path_of(const InterpolatedFamily& fam);
OperatorPath path_of(std::function<Matrix(double)> eval, double T, int dim, std::string id = "");

/// Output times with L2 quadrature weights. Cells carry Gauss-Legendre
/// nodes; cell endpoints have weight zero.
struct TimeGrid
{
    std::vector<double> times;
    std::vector<double> weights;

    double T() const { return times.back(); }
    std::size_t size() const noexcept { return times.size(); }
    bool same_as(const TimeGrid& other) const;
};

struct GridSpec
{
    double T = 1.0;
    /// Uniform cells per unit time.
    int density = 32;
    /// Extra cell boundaries (kinks, source jumps).
    std::vector<double> breakpoints;
    /// Dyadic cells T_0 2^{-j}, j = 1..levels inside the first uniform cell.
    int grading_levels = 24;
    int gauss_points = 4;
};

TimeGrid make_time_grid(const GridSpec& spec);
/// Arbitrary output times (must contain 0) with zero weights.
TimeGrid point_grid(std::vector<double> times);

enum class Method
{
    Auto,
    Explicit, // Dormand-Prince 5(4)
    Implicit, // L-stable SDIRK 4(3)
};

struct SolverOptions
{
    double tol = 1e-10;
    Method method = Method::Auto;
    long max_steps = 400000;
    /// Projected explicit step count above which a stiff problem is
    /// handed to the implicit method.
    long stiffness_budget = 20000;
};

/// Batched data: p initial values and a forcing returning m x p values. The
/// anchor is a time strictly inside the smooth piece being integrated, so
/// piecewise sources can pick the correct side at a jump.
struct BatchData
{
    Matrix U0;
    std::function<Matrix(double t, double anchor)> F;
    std::vector<double> breakpoints;
};

BatchData batch_of(const SourceData& data);
BatchData batch_of(const std::vector<SourceData>& data);

struct Problem
{
    OperatorPath path;
    BatchData data;
    SolverOptions options;
};

struct SolveStats
{
    long steps = 0;
    long rejected = 0;
    Method used = Method::Explicit;
};

struct Trajectory
{
    TimeGrid grid;
    /// m x p per output time.
    std::vector<Matrix> values;
    /// f(t) - A(t) u(t) at each output time.
    std::vector<Matrix> derivs;
    double tol = 0.0;
    std::string id;
    SolveStats stats;
    std::shared_ptr<const Problem> problem;

    int columns() const { return values.empty() ? 0 : static_cast<int>(values.front().cols()); }
    int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().rows()); }
    Vector value(std::size_t j, int column = 0) const { return values[j].col(column); }
    Vector deriv(std::size_t j, int column = 0) const { return derivs[j].col(column); }
    Trajectory column(int c) const;
};

Trajectory solve_batch(const OperatorPath& path, const BatchData& data, const TimeGrid& grid,
                       const SolverOptions& options);
Trajectory solve(const OperatorPath& path, const SourceData& data, const TimeGrid& grid,
                 const SolverOptions& options);
/// Smooth evaluator, uniform output grid with grid_density cells per unit.
Trajectory solve(std::function<Matrix(double)> evaluator, const SourceData& data, double T,
                 double tol, int grid_density);
/// Exact family at tight tolerance.
Trajectory reference_solve(const FormFamily& form, const SourceData& data, const TimeGrid& grid,
                           double tol = 1e-12);
/// Re-solves the trajectory's problem on another grid.
Trajectory resample(const Trajectory& traj, const TimeGrid& grid);

struct NormReport
{
    double l2V = 0.0;
    double l2H = 0.0;
    double h1H = 0.0;
    double mr = 0.0;
    double c0V = 0.0;
    double c0H = 0.0;
};

NormReport norms(const Trajectory& traj, const GelfandTriple& triple, int column = 0);
/// Norms of a - b for single-column trajectories; b is resampled onto a's
/// grid when the grids differ.
NormReport mr_error(const Trajectory& a, const Trajectory& b, const GelfandTriple& triple);
std::vector<NormReport> mr_error_columns(const Trajectory& a, const Trajectory& b,
                                         const GelfandTriple& triple);

struct RepresentationTerms
{
    std::vector<double> times;
    std::vector<Vector> u;
    std::vector<Vector> u1;
    std::vector<Vector> u2;
    std::vector<Vector> u3;
    double residual = 0.0;
    /// Largest change of u2 + u3 under panel halving.
    double quadrature_change = 0.0;
};

/// Frozen-coefficient decomposition u = u1 + u2 + u3 of a discretized
/// solution, evaluated at up to max_eval grid times.
RepresentationTerms at_terms(const InterpolatedFamily& fam, const SourceData& data,
                             const Trajectory& u_lam, const GelfandTriple& triple,
                             int max_eval = 16);

struct VolterraEstimate
{
    double value = 0.0;   // at n_grid
    double doubled = 0.0; // at 2 n_grid
    double change = 0.0;  // relative difference, floored at 1e-12
    double upper = 0.0;   // row-sum bound (sup-norm operator only)
    int n_grid = 0;
};

/// L2(0,T;H) norm of the shifted Volterra operator with kernel
/// (B+mu) e^{-(t-s)(B+mu)} (A_L(t) - A_L(s)) (A_L(s)+mu)^{-1}, B = A_L(t).
VolterraEstimate q_norm_estimate(const InterpolatedFamily& fam, double mu, int n_grid);
double q_norm(const InterpolatedFamily& fam, double mu, int n_grid);

/// C(0,T;H) norm of the Volterra operator with kernel
/// e^{-(t-s)(B+mu)} (A_L(t) - A_L(s)).
VolterraEstimate p_norm_estimate(const InterpolatedFamily& fam, double mu, int n_grid,
                                 std::uint64_t seed = 7, int n_random = 1000);
double p_norm(const InterpolatedFamily& fam, double mu, int n_grid, std::uint64_t seed = 7);

} // namespace formavg

#endif // FORMAVG_EVOLVE_HPP
