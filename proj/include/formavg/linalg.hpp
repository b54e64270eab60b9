// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_LINALG_HPP
#define FORMAVG_LINALG_HPP

#include <cstdint>
#include <vector>

#include "formavg/types.hpp"

namespace formavg
{

/// e^A by Pade scaling and squaring. Throws ExponentialNotConverged on
/// non-finite output.
Matrix expm(const Matrix& A);

/// Principal square root by the Schur method.
Matrix sqrtm(const Matrix& A);

/// Evaluates tau -> e^{-tau B} for tau >= 0. Uses an eigendecomposition when
/// it is well conditioned and agrees with the Pade result at a probe time;
/// otherwise every call falls back to Pade.
class SemigroupEvaluator
{
public:
    explicit SemigroupEvaluator(const Matrix& B);

    Matrix operator()(double tau) const;
    Vector apply(double tau, const Vector& x) const;
    bool uses_eigenbasis() const noexcept { return eigen_ok_; }

private:
    Matrix B_;
    bool eigen_ok_ = false;
    Matrix V_;
    Matrix V_inv_;
    Vector lambda_;
};

/// Connected components of the union sparsity pattern of the matrices,
/// treating A(i,j) != 0 as an undirected edge. Indices inside a component
/// are increasing; components are ordered by their first index.
std::vector<std::vector<int>> coupling_components(const std::vector<Matrix>& matrices);

/// Largest singular value by Golub-Kahan-Lanczos bidiagonalization with
/// full reorthogonalization. Stops when the estimate grows by at most
/// rel_tol over ten steps; throws PowerIterationStalled otherwise.
double largest_singular_value(const Matrix& N, std::uint64_t seed, double rel_tol = 1e-6);

Matrix submatrix(const Matrix& A, const std::vector<int>& idx);

} // namespace formavg

#endif // FORMAVG_LINALG_HPP
