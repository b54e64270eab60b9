// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_TESTS_HELPERS_HPP
#define FORMAVG_TESTS_HELPERS_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "formavg/forms.hpp"

namespace formavg::test
{

inline FormFamily family(const GelfandTriple& triple, std::function<Matrix(double)> assemble,
                         double M, double alpha, Modulus modulus, double T,
                         bool beyond = true)
{
    return FormFamily{"test", triple, std::move(assemble), M, alpha, std::move(modulus), T,
                      beyond};
}

/// Scalar problem u' + a(t) u = f on the trivial triple.
inline FormFamily scalar(std::function<double(double)> a, double M, double alpha,
                         Modulus modulus, double T)
{
    return family(
        make_triple({1.0}, 0.0),
        [a](double t) { return Matrix::Constant(1, 1, Complex(a(t), 0.0)); }, M, alpha,
        std::move(modulus), T);
}

inline Matrix diag(const std::vector<double>& d)
{
    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(d.size()),
                            static_cast<Eigen::Index>(d.size()));
    for (std::size_t k = 0; k < d.size(); ++k) {
        A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = d[k];
    }
    return A;
}

inline Vector scalar_vector(double x)
{
    return Vector::Constant(1, Complex(x, 0.0));
}

} // namespace formavg::test

#endif // FORMAVG_TESTS_HELPERS_HPP
