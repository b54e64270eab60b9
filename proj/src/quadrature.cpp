// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/quadrature.hpp"

#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

#include "formavg/error.hpp"

namespace formavg
{

namespace
{

GaussRule build_rule(int n)
{
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) {
        rule.nodes[n / 2] = 0.0;
    }
    return rule;
}

Matrix panel(const std::function<Matrix(double)>& f, double a, double b, const GaussRule& rule)
{
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    Matrix acc = rule.weights[0] * f(mid + half * rule.nodes[0]);
    for (std::size_t i = 1; i < rule.nodes.size(); ++i) {
        acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return half * acc;
}

Matrix adaptive(const std::function<Matrix(double)>& f, double a, double b, const Matrix& whole,
                const GaussRule& rule, double tol, int depth, int max_depth)
{
    const double mid = 0.5 * (a + b);
    Matrix left = panel(f, a, mid, rule);
    Matrix right = panel(f, mid, b, rule);
    Matrix both = left + right;
    const double diff = (both - whole).cwiseAbs().maxCoeff();
    if (diff <= tol) {
        return both;
    }
    if (depth >= max_depth) {
        fail(ErrorCode::QuadratureNotConverged,
             fmt::format("matrix quadrature on [{}, {}] stalled, refinement change {:.3e}", a, b,
                         diff));
    }
    const double sub_tol = tol * std::numbers::sqrt2 * 0.5;
    return adaptive(f, a, mid, left, rule, sub_tol, depth + 1, max_depth) +
           adaptive(f, mid, b, right, rule, sub_tol, depth + 1, max_depth);
}

} // namespace

const GaussRule& gauss_legendre(int order)
{
    require(order >= 1 && order <= 128, ErrorCode::InvalidArgument,
            fmt::format("Gauss-Legendre order {} out of range", order));
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) {
        it = cache.emplace(order, build_rule(order)).first;
    }
    return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol)
{
    if (a == b) {
        return 0.0;
    }
    boost::math::quadrature::tanh_sinh<double> integrator;
    double error = 0.0;
    double l1 = 0.0;
    double value = 0.0;
    try {
        value = integrator.integrate(f, a, b, 1e-14, &error, &l1);
    } catch (const std::exception& e) {
        fail(ErrorCode::QuadratureNotConverged,
             fmt::format("tanh-sinh on [{}, {}] failed: {}", a, b, e.what()));
    }
    if (!std::isfinite(value) || error > abs_tol) {
        fail(ErrorCode::QuadratureNotConverged,
             fmt::format("tanh-sinh on [{}, {}] error estimate {:.3e} exceeds {:.3e}", a, b, error,
                         abs_tol));
    }
    return value;
}

Matrix integrate_matrix(const std::function<Matrix(double)>& f, double a, double b, int order,
                        double abs_tol, int max_depth)
{
    require(order >= 2, ErrorCode::InvalidArgument, "quadrature order must be >= 2");
    require(b > a, ErrorCode::InvalidArgument, "empty integration interval");
    const GaussRule& rule = gauss_legendre(order);
    Matrix whole = panel(f, a, b, rule);
    return adaptive(f, a, b, whole, rule, abs_tol, 0, max_depth);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument,
            "line fit needs at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, ErrorCode::InvalidArgument, "line fit needs distinct abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

std::vector<double> logspace(double a, double b, int n)
{
    require(a > 0.0 && b > a && n >= 2, ErrorCode::InvalidArgument, "bad logspace arguments");
    std::vector<double> out(n);
    const double la = std::log(a);
    const double lb = std::log(b);
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(la + (lb - la) * i / (n - 1));
    }
    out.front() = a;
    out.back() = b;
    return out;
}

std::vector<double> linspace(double a, double b, int n)
{
    require(n >= 2, ErrorCode::InvalidArgument, "linspace needs at least two points");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = a + (b - a) * i / (n - 1);
    }
    out.back() = b;
    return out;
}

} // namespace formavg
