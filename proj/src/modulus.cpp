// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/modulus.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "formavg/error.hpp"

namespace formavg
{

Modulus::Modulus(Kind kind, double c, double beta, double T,
                 std::vector<std::pair<double, double>> knots)
    : kind_(kind), c_(c), beta_(beta), T_(T), knots_(std::move(knots))
{
    require(std::isfinite(T_) && T_ > 0.0, ErrorCode::InvalidArgument,
            "modulus horizon must be positive");
}

Modulus Modulus::zero(double T)
{
    return Modulus(Kind::Zero, 0.0, 1.0, T, {});
}

Modulus Modulus::power(double beta, double T)
{
    require(beta > 0.0 && beta <= 1.0, ErrorCode::InvalidArgument,
            fmt::format("power modulus exponent {} outside (0,1]", beta));
    return Modulus(Kind::Power, 1.0, beta, T, {});
}

Modulus Modulus::scaled_power(double c, double beta, double T)
{
    require(c >= 0.0 && std::isfinite(c), ErrorCode::InvalidArgument,
            "scaled power modulus needs a nonnegative coefficient");
    require(beta > 0.0 && beta <= 1.0, ErrorCode::InvalidArgument,
            fmt::format("power modulus exponent {} outside (0,1]", beta));
    return Modulus(Kind::ScaledPower, c, beta, T, {});
}

Modulus Modulus::tabulated(std::vector<std::pair<double, double>> knots, double T)
{
    require(knots.size() >= 2, ErrorCode::InvalidArgument, "tabulated modulus needs two knots");
    require(knots.front().first == 0.0 && knots.front().second == 0.0,
            ErrorCode::InvalidArgument, "tabulated modulus must start at (0, 0)");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        require(knots[i].first > knots[i - 1].first, ErrorCode::InvalidArgument,
                "tabulated knots must be strictly increasing in t");
        require(knots[i].second >= knots[i - 1].second, ErrorCode::InvalidArgument,
                "tabulated modulus must be nondecreasing");
    }
    return Modulus(Kind::Tabulated, 1.0, 1.0, T, std::move(knots));
}

double Modulus::operator()(double t) const
{
    require(t >= 0.0 && std::isfinite(t), ErrorCode::InvalidArgument,
            fmt::format("modulus argument {} must be nonnegative", t));
    const double x = std::min(t, T_);
    switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Power:
    case Kind::ScaledPower: return x == 0.0 ? 0.0 : c_ * std::pow(x, beta_);
    case Kind::Tabulated: {
        if (x >= knots_.back().first) {
            return knots_.back().second;
        }
        auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                   [](double v, const auto& k) { return v < k.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double w = (x - lo.first) / (hi.first - lo.first);
        return lo.second + w * (hi.second - lo.second);
    }
    }
    return 0.0;
}

bool Modulus::is_zero() const noexcept
{
    if (kind_ == Kind::Zero) {
        return true;
    }
    if (is_power()) {
        return c_ == 0.0;
    }
    return std::all_of(knots_.begin(), knots_.end(), [](const auto& k) { return k.second == 0.0; });
}

std::vector<double> Modulus::breakpoints() const
{
    std::vector<double> out;
    if (kind_ == Kind::Tabulated) {
        for (const auto& k : knots_) {
            if (k.first > 0.0 && k.first < T_) {
                out.push_back(k.first);
            }
        }
    }
    out.push_back(T_);
    return out;
}

std::string Modulus::describe() const
{
    switch (kind_) {
    case Kind::Zero: return "zero";
    case Kind::Power: return fmt::format("t^{}", beta_);
    case Kind::ScaledPower: return fmt::format("{}*t^{}", c_, beta_);
    case Kind::Tabulated: return fmt::format("tabulated({} knots)", knots_.size());
    }
    return "?";
}

} // namespace formavg
