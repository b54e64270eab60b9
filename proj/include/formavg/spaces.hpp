// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_SPACES_HPP
#define FORMAVG_SPACES_HPP

#include <string_view>
#include <vector>

#include "formavg/types.hpp"

namespace formavg
{

/// Scales of the chain V -> V_gamma -> H -> V'_gamma -> V'.
enum class Scale
{
    V,
    H,
    VPrime,
    VGamma,
    VPrimeGamma,
};

std::string_view to_string(Scale scale) noexcept;
Scale parse_scale(std::string_view name);

/// Spectral realization of a Gelfand triple. Coordinates are taken in an
/// H-orthonormal eigenbasis of the reference operator S = diag(s_k), so
/// every scale norm is a weighted l2 norm with weight s_k^e.
class GelfandTriple
{
public:
    GelfandTriple(RealVector weights, double gamma);

    int dim() const noexcept { return static_cast<int>(weights_.size()); }
    double gamma() const noexcept { return gamma_; }
    double c_H() const noexcept { return c_H_; }
    const RealVector& weights() const noexcept { return weights_; }

    /// Power e such that the squared norm of the scale is sum s_k^e |u_k|^2.
    double exponent(Scale scale) const noexcept;

    /// Diagonal entries s_k^{e/2}.
    RealVector scale_diagonal(Scale scale) const;

    double norm(const Vector& u, Scale scale) const;

    /// D_to * A * D_from^{-1}; its spectral norm is the operator norm.
    Matrix weighted(const Matrix& A, Scale from, Scale to) const;

    double op_norm(const Matrix& A, Scale from, Scale to) const;

private:
    RealVector weights_;
    double gamma_;
    double c_H_;
};

GelfandTriple make_triple(const std::vector<double>& weights, double gamma);

/// Eigenvalues 1 + (k pi)^2, k = 1..m, of 1 - d^2/dx^2 with Dirichlet
/// conditions on (0, 1).
RealVector laplacian_weights(int m);

/// s_k = s_max^{k/(m-1)}, k = 0..m-1: equal spacing on a log scale.
RealVector log_uniform_weights(int m, double s_max);

/// Largest singular value of a dense matrix.
double spectral_norm(const Matrix& A);

} // namespace formavg

#endif // FORMAVG_SPACES_HPP
