// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_DISCRETIZE_HPP
#define FORMAVG_DISCRETIZE_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "formavg/forms.hpp"

namespace formavg
{

/// Uniform subdivision 0 = l_0 < ... < l_{n+1} = T.
struct Subdivision
{
    double T = 1.0;
    int n = 1;

    double mesh() const noexcept { return T / (n + 1); }
    double point(int k) const noexcept { return k == n + 1 ? T : k * mesh(); }
    std::vector<double> points() const;
};

Subdivision uniform_subdivision(double T, int n);

/// How the form is continued past T for the last average A_{n+1}.
enum class Extension
{
    Freeze,   // A(r) = A(T) for r > T
    Continue, // evaluate the family on (T, T + mesh]
};

/// Interval means A_0 .. A_{n+1}; A_{n+1} averages over [T, T + mesh].
std::vector<Matrix> average_forms(const FormFamily& form, const Subdivision& sub,
                                  int quad_order = 8, Extension extension = Extension::Freeze);

/// Piecewise-linear interpolation of the averaged matrices.
class InterpolatedFamily
{
public:
    InterpolatedFamily(Subdivision sub, std::vector<Matrix> averaged,
                       std::shared_ptr<const FormFamily> base = nullptr);

    Matrix operator()(double t) const;

    const Subdivision& subdivision() const noexcept { return sub_; }
    const std::vector<Matrix>& averaged() const noexcept { return averaged_; }
    const FormFamily* base() const noexcept { return base_.get(); }
    std::shared_ptr<const FormFamily> base_ptr() const noexcept { return base_; }
    double mesh() const noexcept { return sub_.mesh(); }
    double T() const noexcept { return sub_.T; }
    int dim() const noexcept { return static_cast<int>(averaged_.front().rows()); }
    /// Interior nodes l_1 .. l_n, where the evaluator has kinks.
    std::vector<double> kinks() const;

private:
    Subdivision sub_;
    std::vector<Matrix> averaged_;
    std::shared_ptr<const FormFamily> base_;
};

InterpolatedFamily interpolated(const Subdivision& sub, std::vector<Matrix> averaged);

/// Averages and interpolates in one call.
InterpolatedFamily discretize(const FormFamily& form, int n, int quad_order = 8,
                              Extension extension = Extension::Freeze);

/// (t/|L|) omega(4|L|) for t <= 2|L|, 2 omega(2t) otherwise.
double omega_lambda(const Modulus& modulus, double mesh, double t);

struct PerturbationReport
{
    double max_static_ratio = 0.0;
    double max_modulus_ratio = 0.0;
    double static_t = 0.0;
    double modulus_t = 0.0;
    double modulus_s = 0.0;
};

/// Sampled ratios |A_L(t) - A(t)| / (2 omega(2|L|)) and
/// |A_L(t) - A_L(s)| / omega_L(|t-s|), norms in L(V, V'_gamma).
PerturbationReport perturbation_check(const FormFamily& form, const InterpolatedFamily& fam,
                                      int n_samples, std::uint64_t seed);

/// omega(2h) + omega(2h)/h^{gamma/2} + int_0^{2h} omega(s)/s^{1+gamma/2} ds.
double bracket_bound(const Modulus& modulus, double gamma, double mesh);

/// Four-term bound for a coarse mesh and a finer mesh refining it.
double two_subdivision_bound(const Modulus& modulus, double gamma, double mesh_coarse,
                             double mesh_fine);

struct OmegaLambdaBounds
{
    double integral = 0.0;        // int_0^T omega_L(s)/s^{1+gamma/2} ds, closed form
    double integral_numeric = 0.0; // same by quadrature
    double integral_bound = 0.0;
    double sup = 0.0;
    double sup_bound = 0.0;
};

OmegaLambdaBounds omega_lambda_bounds(const Modulus& modulus, double gamma, double mesh);

} // namespace formavg

#endif // FORMAVG_DISCRETIZE_HPP
