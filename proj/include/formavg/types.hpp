// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_TYPES_HPP
#define FORMAVG_TYPES_HPP

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace formavg
{

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

} // namespace formavg

#endif // FORMAVG_TYPES_HPP
