// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/builtin.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "formavg/error.hpp"

namespace formavg
{

namespace
{

// Largest V -> V'_gamma norm of a multiple of S: max s^{(1-gamma)/2}.
double s_scale(const GelfandTriple& triple)
{
    return std::pow(triple.weights().maxCoeff(), 0.5 * (1.0 - triple.gamma()));
}

Matrix diag_matrix(const RealVector& d)
{
    return d.cast<Complex>().asDiagonal();
}

} // namespace

FormFamily constant_family(const GelfandTriple& triple, double T)
{
    const int m = triple.dim();
    RealVector d(m);
    for (int k = 0; k < m; ++k) {
        d[k] = (k % 2 == 0 ? 1.0 : 2.0) * triple.weights()[k];
    }
    const Matrix A = diag_matrix(d);
    return FormFamily{"constant",
                      triple,
                      [A](double) { return A; },
                      m > 1 ? 2.0 : 1.0,
                      1.0,
                      Modulus::zero(T),
                      T,
                      true};
}

FormFamily affine_family(const GelfandTriple& triple, double slope, double T)
{
    require(slope >= 0.0 && std::isfinite(slope), ErrorCode::InvalidArgument,
            "affine slope must be nonnegative");
    const Matrix S = diag_matrix(triple.weights());
    const Modulus omega =
        slope == 0.0 ? Modulus::zero(T) : Modulus::scaled_power(slope * s_scale(triple), 1.0, T);
    return FormFamily{"affine",
                      triple,
                      [S, slope](double t) { return Matrix((1.0 + slope * t) * S); },
                      1.0 + slope * T,
                      1.0,
                      omega,
                      T,
                      true};
}

FormFamily holder_family(const GelfandTriple& triple, double beta, double T)
{
    require(beta > 0.0 && beta <= 1.0, ErrorCode::InvalidArgument,
            "Hoelder exponent must lie in (0, 1]");
    const Matrix S = diag_matrix(triple.weights());
    return FormFamily{"holder",
                      triple,
                      [S, beta](double t) {
                          return Matrix((1.0 + 0.5 * (t > 0.0 ? std::pow(t, beta) : 0.0)) * S);
                      },
                      1.0 + 0.5 * std::pow(T, beta),
                      1.0,
                      Modulus::scaled_power(0.5 * s_scale(triple), beta, T),
                      T,
                      true};
}

FormFamily rotating_family(const GelfandTriple& triple, double kappa, double T)
{
    const int m = triple.dim();
    require(m >= 2, ErrorCode::InvalidArgument, "rotating family needs at least two modes");
    require(kappa >= 0.0 && kappa < 1.0, ErrorCode::InvalidArgument,
            "rotating family needs 0 <= kappa < 1");
    const RealVector sq = triple.scale_diagonal(Scale::V);
    const double g = 0.5 * (1.0 - triple.gamma());
    double lip = 0.0;
    for (int j = 0; 2 * j + 1 < m; ++j) {
        const double nu = 1.0 + (j % 2);
        lip = std::max(lip, nu * std::pow(triple.weights()[2 * j + 1], g));
    }
    const Matrix S = diag_matrix(triple.weights());
    auto assemble = [S, sq, kappa, m](double t) {
        Matrix A = S;
        for (int j = 0; 2 * j + 1 < m; ++j) {
            const int a = 2 * j;
            const int b = 2 * j + 1;
            const double nu = 1.0 + (j % 2);
            const Complex z = std::polar(1.0, nu * t);
            A(a, b) += kappa * sq[a] * sq[b] * z;
            A(b, a) -= kappa * sq[a] * sq[b] * std::conj(z);
        }
        return A;
    };
    const Modulus omega =
        kappa == 0.0 ? Modulus::zero(T) : Modulus::scaled_power(kappa * lip, 1.0, T);
    return FormFamily{"rotating", triple, assemble, std::sqrt(1.0 + kappa * kappa), 1.0, omega,
                      T, true};
}

const std::vector<std::string>& builtin_family_names()
{
    static const std::vector<std::string> names{"constant", "affine", "holder", "rotating"};
    return names;
}

FormFamily make_family(const std::string& name, const GelfandTriple& triple,
                       const FamilyParams& params, double T)
{
    require(T > 0.0 && std::isfinite(T), ErrorCode::InvalidArgument, "horizon must be positive");
    if (name == "constant") {
        return constant_family(triple, T);
    }
    if (name == "affine") {
        return affine_family(triple, params.slope, T);
    }
    if (name == "holder") {
        return holder_family(triple, params.beta, T);
    }
    if (name == "rotating") {
        return rotating_family(triple, params.kappa, T);
    }
    fail(ErrorCode::InvalidArgument, fmt::format("unknown family '{}'", name));
}

Vector initial_preset(const std::string& name, const GelfandTriple& triple, std::uint64_t seed)
{
    const int m = triple.dim();
    if (name == "zero") {
        return Vector::Zero(m);
    }
    Vector u;
    if (name == "first") {
        u = Vector::Unit(m, 0);
    } else if (name == "smooth") {
        u.resize(m);
        for (int k = 0; k < m; ++k) {
            u[k] = 1.0 / ((k + 1.0) * (k + 1.0));
        }
    } else if (name == "random") {
        Rng rng(seed);
        u = random_vector(rng, m);
    } else {
        fail(ErrorCode::ConfigError, fmt::format("unknown u0 preset '{}'", name));
    }
    return u / triple.norm(u, Scale::V);
}

namespace
{

// Orthonormal shifted Legendre polynomials on [0, T], degrees 0..2.
double legendre(int j, double t, double T)
{
    const double x = 2.0 * t / T - 1.0;
    const double p = j == 0 ? 1.0 : (j == 1 ? x : 0.5 * (3.0 * x * x - 1.0));
    return std::sqrt((2.0 * j + 1.0) / T) * p;
}

} // namespace

SourceData make_data(const std::string& u0_preset, const std::string& f_preset,
                     const GelfandTriple& triple, double T, std::uint64_t seed)
{
    const int m = triple.dim();
    SourceData data;
    data.u0 = initial_preset(u0_preset, triple, seed);
    if (f_preset == "zero") {
        return data;
    }
    Vector c(m);
    for (int k = 0; k < m; ++k) {
        c[k] = 1.0 / (k + 1.0);
    }
    c.normalize();
    if (f_preset == "constant") {
        c /= std::sqrt(T);
        data.f = [c](double) { return c; };
    } else if (f_preset == "oscillating") {
        // |cos(2 pi t / T)|^2 integrates to T/2.
        c *= std::sqrt(2.0 / T);
        data.f = [c, T](double t) { return Vector(std::cos(2.0 * std::numbers::pi * t / T) * c); };
    } else if (f_preset == "random") {
        Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::vector<Vector> coef;
        double total = 0.0;
        for (int j = 0; j < 3; ++j) {
            coef.push_back(random_vector(rng, m));
            total += coef.back().squaredNorm();
        }
        for (auto& v : coef) {
            v /= std::sqrt(total);
        }
        data.f = [coef, T](double t) {
            Vector out = legendre(0, t, T) * coef[0];
            out += legendre(1, t, T) * coef[1];
            out += legendre(2, t, T) * coef[2];
            return out;
        };
    } else {
        fail(ErrorCode::ConfigError, fmt::format("unknown f preset '{}'", f_preset));
    }
    return data;
}

std::vector<SourceData> data_bank(int n, const GelfandTriple& triple, double T,
                                  std::uint64_t seed)
{
    require(n >= 0, ErrorCode::InvalidArgument, "bank size must be nonnegative");
    const int m = triple.dim();
    Rng rng(seed);
    const RealVector inv_sqrt = triple.scale_diagonal(Scale::V).cwiseInverse();
    std::vector<SourceData> bank;
    for (int i = 0; i < n; ++i) {
        Vector y = random_vector(rng, m);
        std::vector<Vector> coef;
        double total = y.squaredNorm();
        for (int j = 0; j < 3; ++j) {
            coef.push_back(random_vector(rng, m));
            total += coef.back().squaredNorm();
        }
        const double scale = 1.0 / std::sqrt(total);
        SourceData d;
        d.u0 = scale * (inv_sqrt.asDiagonal() * y);
        for (auto& v : coef) {
            v *= scale;
        }
        d.f = [coef, T](double t) {
            Vector out = legendre(0, t, T) * coef[0];
            out += legendre(1, t, T) * coef[1];
            out += legendre(2, t, T) * coef[2];
            return out;
        };
        bank.push_back(std::move(d));
    }
    return bank;
}

} // namespace formavg
