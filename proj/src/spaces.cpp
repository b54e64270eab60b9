// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "formavg/error.hpp"

namespace formavg
{

std::string_view to_string(Scale scale) noexcept
{
    switch (scale) {
    case Scale::V: return "V";
    case Scale::H: return "H";
    case Scale::VPrime: return "Vprime";
    case Scale::VGamma: return "Vgamma";
    case Scale::VPrimeGamma: return "VprimeGamma";
    }
    return "?";
}

Scale parse_scale(std::string_view name)
{
    for (Scale s : {Scale::V, Scale::H, Scale::VPrime, Scale::VGamma, Scale::VPrimeGamma}) {
        if (name == to_string(s)) {
            return s;
        }
    }
    fail(ErrorCode::InvalidArgument, fmt::format("unknown scale '{}'", name));
}

GelfandTriple::GelfandTriple(RealVector weights, double gamma)
    : weights_(std::move(weights)), gamma_(gamma), c_H_(0.0)
{
    require(weights_.size() > 0, ErrorCode::InvalidArgument, "triple needs at least one weight");
    require(gamma_ >= 0.0 && gamma_ < 1.0, ErrorCode::InvalidArgument,
            fmt::format("gamma must lie in [0,1), got {}", gamma_));
    for (Eigen::Index k = 0; k < weights_.size(); ++k) {
        require(std::isfinite(weights_[k]) && weights_[k] >= 1.0, ErrorCode::InvalidArgument,
                fmt::format("weight {} is {}, must be >= 1", k, weights_[k]));
        if (k > 0) {
            require(weights_[k] >= weights_[k - 1], ErrorCode::InvalidArgument,
                    "weights must be nondecreasing");
        }
    }
    c_H_ = 1.0 / std::sqrt(weights_.minCoeff());
}

double GelfandTriple::exponent(Scale scale) const noexcept
{
    switch (scale) {
    case Scale::V: return 1.0;
    case Scale::H: return 0.0;
    case Scale::VPrime: return -1.0;
    case Scale::VGamma: return gamma_;
    case Scale::VPrimeGamma: return -gamma_;
    }
    return 0.0;
}

RealVector GelfandTriple::scale_diagonal(Scale scale) const
{
    const double e = 0.5 * exponent(scale);
    if (e == 0.0) {
        return RealVector::Ones(weights_.size());
    }
    return weights_.array().pow(e).matrix();
}

double GelfandTriple::norm(const Vector& u, Scale scale) const
{
    require(u.size() == weights_.size(), ErrorCode::DimensionMismatch,
            fmt::format("vector has length {}, triple has dimension {}", u.size(), dim()));
    const double e = exponent(scale);
    if (e == 0.0) {
        return u.norm();
    }
    double acc = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) {
        acc += std::pow(weights_[k], e) * std::norm(u[k]);
    }
    return std::sqrt(acc);
}

Matrix GelfandTriple::weighted(const Matrix& A, Scale from, Scale to) const
{
    require(A.rows() == weights_.size() && A.cols() == weights_.size(),
            ErrorCode::DimensionMismatch,
            fmt::format("matrix is {}x{}, triple has dimension {}", A.rows(), A.cols(), dim()));
    const RealVector d_to = scale_diagonal(to);
    const RealVector d_from_inv = scale_diagonal(from).cwiseInverse();
    return d_to.asDiagonal() * A * d_from_inv.asDiagonal();
}

double GelfandTriple::op_norm(const Matrix& A, Scale from, Scale to) const
{
    return spectral_norm(weighted(A, from, to));
}

GelfandTriple make_triple(const std::vector<double>& weights, double gamma)
{
    RealVector w(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t k = 0; k < weights.size(); ++k) {
        w[static_cast<Eigen::Index>(k)] = weights[k];
    }
    return GelfandTriple(std::move(w), gamma);
}

RealVector laplacian_weights(int m)
{
    require(m >= 1, ErrorCode::InvalidArgument, "laplacian needs at least one mode");
    RealVector w(m);
    for (int k = 0; k < m; ++k) {
        const double kp = (k + 1) * std::numbers::pi;
        w[k] = 1.0 + kp * kp;
    }
    return w;
}

RealVector log_uniform_weights(int m, double s_max)
{
    require(m >= 2, ErrorCode::InvalidArgument, "log-uniform weights need at least two modes");
    require(s_max >= 1.0 && std::isfinite(s_max), ErrorCode::InvalidArgument,
            "s_max must be finite and >= 1");
    RealVector w(m);
    for (int k = 0; k < m; ++k) {
        w[k] = std::pow(s_max, static_cast<double>(k) / (m - 1));
    }
    w[m - 1] = s_max;
    return w;
}

double spectral_norm(const Matrix& A)
{
    if (A.size() == 0) {
        return 0.0;
    }
    if (A.rows() == 1 || A.cols() == 1) {
        return A.norm();
    }
    if (A.rows() <= 32) {
        Eigen::JacobiSVD<Matrix> svd(A);
        return svd.singularValues()[0];
    }
    Eigen::BDCSVD<Matrix> svd(A);
    return svd.singularValues()[0];
}

} // namespace formavg
