// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_MODULUS_HPP
#define FORMAVG_MODULUS_HPP

#include <string>
#include <utility>
#include <vector>

namespace formavg
{

/// Modulus of continuity on [0, T], extended by its value at T beyond the
/// horizon.
class Modulus
{
public:
    enum class Kind
    {
        Zero,
        Power,       // t^beta
        ScaledPower, // c t^beta
        Tabulated,   // piecewise linear through knots
    };

    static Modulus zero(double T);
    static Modulus power(double beta, double T);
    static Modulus scaled_power(double c, double beta, double T);
    /// Knots must start at (0, 0), be strictly increasing in t and
    /// nondecreasing in value. Past the last knot the value is held.
    static Modulus tabulated(std::vector<std::pair<double, double>> knots, double T);

    double operator()(double t) const;

    Kind kind() const noexcept { return kind_; }
    double horizon() const noexcept { return T_; }
    double coefficient() const noexcept { return c_; }
    double beta() const noexcept { return beta_; }
    const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

    bool is_zero() const noexcept;
    /// Power or scaled power: omega(t) = c t^beta on [0, T].
    bool is_power() const noexcept { return kind_ == Kind::Power || kind_ == Kind::ScaledPower; }

    /// Points in (0, T] where the modulus may fail to be smooth.
    std::vector<double> breakpoints() const;

    std::string describe() const;

private:
    Modulus(Kind kind, double c, double beta, double T,
            std::vector<std::pair<double, double>> knots);

    Kind kind_;
    double c_;
    double beta_;
    double T_;
    std::vector<std::pair<double, double>> knots_;
};

} // namespace formavg

#endif // FORMAVG_MODULUS_HPP
