// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "formavg/error.hpp"
#include "formavg/quadrature.hpp"

namespace formavg
{

Matrix FormFamily::operator()(double t) const
{
    require(t >= -1e-14 * T && t <= T * (1.0 + 1e-14), ErrorCode::InvalidArgument,
            fmt::format("form '{}' evaluated at t={} outside [0, {}]", name, t, T));
    return assemble(std::clamp(t, 0.0, T));
}

Matrix FormFamily::extended(double t) const
{
    require(t >= -1e-14 * T && t <= 2.0 * T * (1.0 + 1e-14), ErrorCode::InvalidArgument,
            fmt::format("form '{}' evaluated at t={} outside [0, 2T]", name, t));
    if (t <= T) {
        return (*this)(t);
    }
    require(defined_beyond_horizon, ErrorCode::InvalidArgument,
            fmt::format("form '{}' is not defined beyond its horizon", name));
    return assemble(t);
}

Vector SourceData::forcing(double t) const
{
    if (!f) {
        return Vector::Zero(u0.size());
    }
    return f(t);
}

Vector random_vector(Rng& rng, int m)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(m);
    for (int k = 0; k < m; ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        v[k] = Complex(re, im);
    }
    return v;
}

Vector random_unit(Rng& rng, const GelfandTriple& triple, Scale scale)
{
    Vector v = random_vector(rng, triple.dim());
    return v / triple.norm(v, scale);
}

namespace
{

struct MatrixConstants
{
    double M = 0.0;
    double alpha = 0.0;
    Vector M_witness;
    Vector alpha_witness;
};

// Constants of one matrix in the V-metric. W = S^{-1/2} A S^{-1/2} represents
// the form on the V-orthonormal basis, so |W| is the V->V' norm and the
// bottom eigenvalue of its Hermitian part is the coercivity constant.
MatrixConstants matrix_constants(const GelfandTriple& triple, const Matrix& A)
{
    const Matrix W = triple.weighted(A, Scale::V, Scale::VPrime);
    const RealVector inv_sqrt = triple.scale_diagonal(Scale::V).cwiseInverse();
    MatrixConstants out;
    Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeFullV);
    out.M = svd.singularValues()[0];
    out.M_witness = inv_sqrt.asDiagonal() * svd.matrixV().col(0);
    const Matrix herm = 0.5 * (W + W.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(herm);
    out.alpha = eig.eigenvalues()[0];
    out.alpha_witness = inv_sqrt.asDiagonal() * eig.eigenvectors().col(0);
    return out;
}

constexpr double kConstantSlack = 1e-10;

void check_against_declared(const MatrixConstants& c, double M, double alpha, double t)
{
    if (c.M > M * (1.0 + kConstantSlack)) {
        throw Error(ErrorCode::DeclaredConstantViolated,
                    fmt::format("boundedness: sampled |A(t)|_(V,V') = {:.12g} exceeds M = {:.12g} "
                                "at t = {}",
                                c.M, M, t),
                    Witness{t, t, c.M_witness});
    }
    if (c.alpha < alpha * (1.0 - kConstantSlack)) {
        throw Error(ErrorCode::DeclaredConstantViolated,
                    fmt::format("coercivity: sampled Re a(t,u,u)/|u|_V^2 = {:.12g} below alpha = "
                                "{:.12g} at t = {}",
                                c.alpha, alpha, t),
                    Witness{t, t, c.alpha_witness});
    }
}

} // namespace

ConstantsReport check_matrix_constants(const GelfandTriple& triple, const Matrix& A, double M,
                                       double alpha, double t)
{
    const MatrixConstants c = matrix_constants(triple, A);
    check_against_declared(c, M, alpha, t);
    return ConstantsReport{c.M, c.alpha, t, t};
}

ConstantsReport estimate_constants(const FormFamily& form, int n_time, int n_vec,
                                   std::uint64_t seed)
{
    require(n_time >= 1 && n_vec >= 1, ErrorCode::InvalidArgument,
            "estimate_constants needs n_time, n_vec >= 1");
    const std::vector<double> times =
        n_time == 1 ? std::vector<double>{0.0} : linspace(0.0, form.T, n_time);
    Rng rng(seed);
    const GelfandTriple& tr = form.triple;
    ConstantsReport report;
    report.alpha_hat = std::numeric_limits<double>::infinity();
    for (double t : times) {
        const Matrix A = form(t);
        const MatrixConstants c = matrix_constants(tr, A);
        // Random forms give lower bounds for M and upper bounds for alpha;
        // they guard the exact values against a wrong metric.
        for (int i = 0; i < n_vec; ++i) {
            const Vector u = random_unit(rng, tr, Scale::V);
            const Vector v = random_unit(rng, tr, Scale::V);
            const double a_uv = std::abs(v.dot(A * u));
            const double a_uu = u.dot(A * u).real();
            require(a_uv <= c.M * (1.0 + 1e-9) + 1e-300 && a_uu >= c.alpha * (1.0 - 1e-9) - 1e-12,
                    ErrorCode::InvalidArgument, "constant estimate inconsistent with samples");
        }
        check_against_declared(c, form.M, form.alpha, t);
        if (c.M > report.M_hat) {
            report.M_hat = c.M;
            report.t_M = t;
        }
        if (c.alpha < report.alpha_hat) {
            report.alpha_hat = c.alpha;
            report.t_alpha = t;
        }
    }
    return report;
}

namespace
{

std::vector<std::pair<double, double>> sample_pairs(double T, double delta, int n, Rng& rng)
{
    std::vector<std::pair<double, double>> pairs;
    const double d = std::min(delta, T);
    pairs.emplace_back(0.0, d);
    pairs.emplace_back(T - d, T);
    for (int j = 1; j <= 12 && static_cast<int>(pairs.size()) < n; ++j) {
        const double h = d * std::pow(10.0, -0.5 * j);
        pairs.emplace_back(0.0, h);
        pairs.emplace_back(T - h, T);
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    while (static_cast<int>(pairs.size()) < n) {
        const double t = T * unif(rng);
        const double gap = d * unif(rng);
        const double s = unif(rng) < 0.5 ? std::max(0.0, t - gap) : std::min(T, t + gap);
        pairs.emplace_back(t, s);
    }
    return pairs;
}

} // namespace

DiniReport verify_dini(const FormFamily& form, int n_pairs, std::uint64_t seed)
{
    require(n_pairs >= 1, ErrorCode::InvalidArgument, "verify_dini needs n_pairs >= 1");
    Rng rng(seed);
    const auto pairs = sample_pairs(form.T, form.T, n_pairs, rng);
    const GelfandTriple& tr = form.triple;
    DiniReport report;
    for (const auto& [t, s] : pairs) {
        if (t == s) {
            continue;
        }
        ++report.pairs;
        const Matrix D = form(t) - form(s);
        const Matrix Wd = tr.weighted(D, Scale::V, Scale::VPrimeGamma);
        const double n = spectral_norm(Wd);
        const double w = form.modulus(std::abs(t - s));
        double ratio = 0.0;
        if (w > 0.0) {
            ratio = n / w;
        } else if (n > 1e-13 * (1.0 + form(t).norm())) {
            ratio = std::numeric_limits<double>::infinity();
        }
        if (ratio > report.max_ratio) {
            report.max_ratio = ratio;
            report.t = t;
            report.s = s;
        }
        if (ratio > 1.0 + 1e-9) {
            Eigen::JacobiSVD<Matrix> svd(Wd, Eigen::ComputeFullV);
            const Vector x = tr.scale_diagonal(Scale::V).cwiseInverse().asDiagonal() *
                             svd.matrixV().col(0);
            throw Error(ErrorCode::DiniViolated,
                        fmt::format("|A(t)-A(s)|_(V,V'_gamma) / omega(|t-s|) = {:.12g} at t={}, "
                                    "s={}",
                                    ratio, t, s),
                        Witness{t, s, x});
        }
    }
    return report;
}

namespace
{

// c * integral of s^{p-1} over [a, b].
double power_piece(double c, double p, double a, double b)
{
    if (c == 0.0 || a == b) {
        return 0.0;
    }
    if (p == 0.0) {
        require(a > 0.0, ErrorCode::DivergentIntegral, "logarithmic divergence at 0");
        return c * std::log(b / a);
    }
    if (a == 0.0) {
        require(p > 0.0, ErrorCode::DivergentIntegral,
                fmt::format("integrand s^{} is not integrable at 0", p - 1.0));
        return c * std::pow(b, p) / p;
    }
    return c * (std::pow(b, p) - std::pow(a, p)) / p;
}

} // namespace

double dini_integral(const Modulus& modulus, double gamma, double a, double b)
{
    const double T = modulus.horizon();
    require(a >= 0.0 && a < b && b <= 2.0 * T * (1.0 + 1e-12), ErrorCode::InvalidArgument,
            fmt::format("dini_integral interval [{}, {}] not inside [0, 2T]", a, b));
    require(gamma >= 0.0 && gamma < 1.0, ErrorCode::InvalidArgument, "gamma outside [0,1)");
    if (modulus.is_zero()) {
        return 0.0;
    }
    const double g2 = 0.5 * gamma;
    if (modulus.is_power()) {
        const double c = modulus.coefficient();
        const double beta = modulus.beta();
        if (a == 0.0 && beta <= g2) {
            fail(ErrorCode::DivergentIntegral,
                 fmt::format("beta = {} <= gamma/2 = {}: Dini integral diverges at 0", beta, g2));
        }
        double value = 0.0;
        if (a < T) {
            value += power_piece(c, beta - g2, a, std::min(b, T));
        }
        if (b > T) {
            value += power_piece(c * std::pow(T, beta), -g2, std::max(a, T), b);
        }
        // Independent tanh-sinh evaluation where the integrand is tame enough.
        if (a > 0.0 || beta - g2 >= 0.2) {
            const auto f = [&](double s) { return modulus(s) / s / std::pow(s, g2); };
            double numeric = 0.0;
            bool ok = true;
            try {
                const double split = std::clamp(T, a, b);
                numeric = integrate(f, a, split, 1e-9) + integrate(f, split, b, 1e-9);
            } catch (const Error&) {
                ok = false;
            }
            if (ok && std::abs(numeric - value) > 1e-8 * std::max(1.0, std::abs(value))) {
                fail(ErrorCode::QuadratureNotConverged,
                     fmt::format("closed form {:.15g} and quadrature {:.15g} disagree", value,
                                 numeric));
            }
        }
        return value;
    }
    // Tabulated: omega = k0 + k1 s on each piece, integrated exactly.
    auto knots = modulus.knots();
    if (knots.back().first < T) {
        knots.emplace_back(T, knots.back().second);
    }
    double value = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double lo = std::max(a, knots[i].first);
        const double hi = std::min(b, std::min(knots[i + 1].first, T));
        if (hi <= lo) {
            continue;
        }
        const double k1 = (knots[i + 1].second - knots[i].second) /
                          (knots[i + 1].first - knots[i].first);
        const double k0 = knots[i].second - k1 * knots[i].first;
        value += power_piece(k0, -g2, lo, hi) + power_piece(k1, 1.0 - g2, lo, hi);
    }
    if (b > T) {
        value += power_piece(modulus(T), -g2, std::max(a, T), b);
    }
    return value;
}

double sup_ratio(const Modulus& modulus, double gamma)
{
    require(gamma >= 0.0 && gamma < 1.0, ErrorCode::InvalidArgument, "gamma outside [0,1)");
    if (modulus.is_zero()) {
        return 0.0;
    }
    const double T = modulus.horizon();
    const double g2 = 0.5 * gamma;
    if (modulus.is_power()) {
        const double beta = modulus.beta();
        if (beta < g2) {
            fail(ErrorCode::Unbounded,
                 fmt::format("omega(t)/t^(gamma/2) unbounded: beta = {} < gamma/2 = {}", beta, g2));
        }
        return modulus.coefficient() * std::pow(T, beta - g2);
    }
    std::vector<double> ts = logspace(T * 1e-8, T, 10000);
    for (double k : modulus.breakpoints()) {
        ts.push_back(k);
    }
    double best = 0.0;
    for (double t : ts) {
        best = std::max(best, modulus(t) / std::pow(t, g2));
    }
    return best;
}

namespace
{

// Maximizes |B y| - eps |W y| over the unit sphere by projected gradient
// ascent with backtracking.
double ascend(const Matrix& B, const RealVector& w, double eps, Vector y)
{
    const auto value = [&](const Vector& v) {
        return (B * v).norm() - eps * (w.asDiagonal() * v).norm();
    };
    y.normalize();
    double f = value(y);
    double step = 1.0;
    for (int it = 0; it < 200 && step > 1e-12; ++it) {
        const Vector By = B * y;
        const Vector Wy = w.asDiagonal() * y;
        Vector grad = Vector::Zero(y.size());
        const double nb = By.norm();
        const double nw = Wy.norm();
        if (nb > 0.0) {
            grad += B.adjoint() * By / nb;
        }
        if (nw > 0.0) {
            grad -= eps * (w.asDiagonal() * Wy) / nw;
        }
        grad -= y.dot(grad).real() * y;
        if (grad.norm() < 1e-14) {
            break;
        }
        bool improved = false;
        while (step > 1e-12) {
            Vector cand = (y + step * grad).normalized();
            const double fc = value(cand);
            if (fc > f) {
                y = cand;
                f = fc;
                step *= 2.0;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            break;
        }
    }
    return f;
}

} // namespace

double relative_continuity_profile(const FormFamily& form, double epsilon, double delta,
                                   int n_samples, std::uint64_t seed)
{
    require(epsilon >= 0.0 && delta > 0.0, ErrorCode::InvalidArgument,
            "relative continuity needs epsilon >= 0 and delta > 0");
    require(n_samples >= 1, ErrorCode::InvalidArgument, "n_samples must be >= 1");
    Rng rng(seed);
    const GelfandTriple& tr = form.triple;
    const int m = tr.dim();
    const RealVector sq = tr.scale_diagonal(Scale::V);
    const RealVector w = tr.weights();
    const auto pairs = sample_pairs(form.T, delta, std::max(n_samples, 2), rng);
    double eta = 0.0;
    for (const auto& [t, s] : pairs) {
        if (t == s) {
            continue;
        }
        // With x = S^{1/2} y the X = V' norm of x is |y|, the V norm is |S y|
        // and |(A(t)-A(s))x|_{V'} = |S^{-1/2} D S^{1/2} y|.
        const Matrix D = form(t) - form(s);
        const Matrix B = sq.cwiseInverse().asDiagonal() * D * sq.asDiagonal();
        Eigen::JacobiSVD<Matrix> svd(B, Eigen::ComputeFullV);
        std::vector<Vector> starts;
        starts.push_back(svd.matrixV().col(0));
        starts.push_back(Vector::Unit(m, 0));
        for (int i = 0; i < 3; ++i) {
            starts.push_back(random_vector(rng, m));
        }
        for (const Vector& y0 : starts) {
            eta = std::max(eta, ascend(B, w, epsilon, y0));
        }
    }
    return std::max(eta, 0.0);
}

} // namespace formavg
