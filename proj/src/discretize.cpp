// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "formavg/error.hpp"
#include "formavg/quadrature.hpp"

namespace formavg
{

std::vector<double> Subdivision::points() const
{
    std::vector<double> out(n + 2);
    for (int k = 0; k <= n + 1; ++k) {
        out[k] = point(k);
    }
    return out;
}

Subdivision uniform_subdivision(double T, int n)
{
    require(T > 0.0 && std::isfinite(T), ErrorCode::InvalidArgument,
            "subdivision horizon must be positive");
    require(n >= 1, ErrorCode::InvalidArgument,
            fmt::format("subdivision needs n >= 1 interior points, got {}", n));
    return Subdivision{T, n};
}

std::vector<Matrix> average_forms(const FormFamily& form, const Subdivision& sub, int quad_order,
                                  Extension extension)
{
    require(quad_order >= 2, ErrorCode::InvalidArgument, "quad_order must be >= 2");
    require(std::abs(sub.T - form.T) <= 1e-12 * form.T, ErrorCode::InvalidArgument,
            "subdivision and form have different horizons");
    const double h = sub.mesh();
    const double T = form.T;
    const Matrix AT = form(T);
    std::function<Matrix(double)> eval;
    if (extension == Extension::Freeze) {
        eval = [&](double r) { return r >= T ? AT : form(r); };
    } else {
        eval = [&](double r) { return form.extended(r); };
    }
    std::vector<Matrix> out;
    out.reserve(sub.n + 2);
    for (int k = 0; k <= sub.n + 1; ++k) {
        const double a = k * h;
        const double b = k == sub.n ? T : (k == sub.n + 1 ? T + h : (k + 1) * h);
        const double lo = k == sub.n + 1 ? T : a;
        const double scale = std::max(1.0, eval(lo).cwiseAbs().maxCoeff());
        Matrix integral = integrate_matrix(eval, lo, b, quad_order, 1e-11 * scale * (b - lo), 60);
        out.push_back(integral / (b - lo));
    }
    return out;
}

InterpolatedFamily::InterpolatedFamily(Subdivision sub, std::vector<Matrix> averaged,
                                       std::shared_ptr<const FormFamily> base)
    : sub_(sub), averaged_(std::move(averaged)), base_(std::move(base))
{
    require(static_cast<int>(averaged_.size()) == sub_.n + 2, ErrorCode::DimensionMismatch,
            fmt::format("expected {} averaged matrices, got {}", sub_.n + 2, averaged_.size()));
    for (const Matrix& A : averaged_) {
        require(A.rows() == averaged_.front().rows() && A.cols() == A.rows(),
                ErrorCode::DimensionMismatch, "averaged matrices must be square of equal size");
    }
}

Matrix InterpolatedFamily::operator()(double t) const
{
    const double T = sub_.T;
    require(t >= -1e-14 * T && t <= T * (1.0 + 1e-14), ErrorCode::InvalidArgument,
            fmt::format("interpolated family evaluated at t={} outside [0, {}]", t, T));
    t = std::clamp(t, 0.0, T);
    const double h = sub_.mesh();
    const double x = t / h;
    const double kr = std::round(x);
    if (std::abs(t - kr * h) <= 1e-14 * T) {
        return averaged_[static_cast<std::size_t>(kr)];
    }
    const int k = std::min(static_cast<int>(std::floor(x)), sub_.n);
    const double w = (t - k * h) / h;
    return (1.0 - w) * averaged_[k] + w * averaged_[k + 1];
}

std::vector<double> InterpolatedFamily::kinks() const
{
    std::vector<double> out;
    for (int k = 1; k <= sub_.n; ++k) {
        out.push_back(sub_.point(k));
    }
    return out;
}

InterpolatedFamily interpolated(const Subdivision& sub, std::vector<Matrix> averaged)
{
    return InterpolatedFamily(sub, std::move(averaged));
}

InterpolatedFamily discretize(const FormFamily& form, int n, int quad_order, Extension extension)
{
    const Subdivision sub = uniform_subdivision(form.T, n);
    auto base = std::make_shared<const FormFamily>(form);
    return InterpolatedFamily(sub, average_forms(form, sub, quad_order, extension), base);
}

double omega_lambda(const Modulus& modulus, double mesh, double t)
{
    const double T = modulus.horizon();
    require(mesh > 0.0 && mesh <= 0.5 * T * (1.0 + 1e-12), ErrorCode::InvalidArgument,
            fmt::format("mesh {} outside (0, T/2]", mesh));
    require(t >= 0.0 && t <= T * (1.0 + 1e-12), ErrorCode::InvalidArgument,
            fmt::format("omega_lambda argument {} outside [0, T]", t));
    if (t <= 2.0 * mesh) {
        return t / mesh * modulus(4.0 * mesh);
    }
    return 2.0 * modulus(2.0 * t);
}

namespace
{

double ratio_or_inf(double value, double bound, double scale)
{
    if (bound > 0.0) {
        return value / bound;
    }
    return value > 1e-13 * std::max(1.0, scale) ? std::numeric_limits<double>::infinity() : 0.0;
}

} // namespace

PerturbationReport perturbation_check(const FormFamily& form, const InterpolatedFamily& fam,
                                      int n_samples, std::uint64_t seed)
{
    require(n_samples >= 1, ErrorCode::InvalidArgument, "n_samples must be >= 1");
    const GelfandTriple& tr = form.triple;
    const double T = form.T;
    const double h = fam.mesh();
    const Modulus& omega = form.modulus;
    const double static_bound = 2.0 * omega(2.0 * h);
    const double scale = form(0.0).cwiseAbs().maxCoeff();
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<double> times;
    for (double p : fam.subdivision().points()) {
        times.push_back(p);
        times.push_back(std::min(T, p + 0.5 * h));
    }
    while (static_cast<int>(times.size()) < n_samples) {
        times.push_back(T * unif(rng));
    }

    PerturbationReport rep;
    for (double t : times) {
        const double n = tr.op_norm(fam(t) - form(t), Scale::V, Scale::VPrimeGamma);
        const double r = ratio_or_inf(n, static_bound, scale);
        if (r > rep.max_static_ratio) {
            rep.max_static_ratio = r;
            rep.static_t = t;
        }
        if (r > 1.0 + 1e-9) {
            throw Error(ErrorCode::BoundViolated,
                        fmt::format("|A_L(t) - A(t)| / 2 omega(2|L|) = {:.12g} at t = {}", r, t),
                        Witness{t, t, Vector()});
        }
    }

    std::vector<std::pair<double, double>> pairs;
    const std::vector<double> gaps = logspace(1e-6 * h, std::min(4.0 * h, T), 12);
    for (double g : gaps) {
        const double t = std::min(T, fam.subdivision().point(1) + 0.5 * g);
        pairs.emplace_back(t, std::max(0.0, t - g));
        pairs.emplace_back(T, std::max(0.0, T - g));
    }
    while (static_cast<int>(pairs.size()) < n_samples) {
        const double t = T * unif(rng);
        const double s = unif(rng) < 0.5 ? T * unif(rng)
                                          : std::clamp(t + (unif(rng) - 0.5) * 6.0 * h, 0.0, T);
        pairs.emplace_back(t, s);
    }
    for (const auto& [t, s] : pairs) {
        if (t == s) {
            continue;
        }
        const double n = tr.op_norm(fam(t) - fam(s), Scale::V, Scale::VPrimeGamma);
        const double r = ratio_or_inf(n, omega_lambda(omega, h, std::abs(t - s)), scale);
        if (r > rep.max_modulus_ratio) {
            rep.max_modulus_ratio = r;
            rep.modulus_t = t;
            rep.modulus_s = s;
        }
        if (r > 1.0 + 1e-9) {
            throw Error(ErrorCode::BoundViolated,
                        fmt::format("|A_L(t) - A_L(s)| / omega_L(|t-s|) = {:.12g} at t = {}, s = {}",
                                    r, t, s),
                        Witness{t, s, Vector()});
        }
    }
    return rep;
}

double bracket_bound(const Modulus& modulus, double gamma, double mesh)
{
    const double T = modulus.horizon();
    require(mesh > 0.0 && mesh <= 0.5 * T * (1.0 + 1e-12), ErrorCode::InvalidArgument,
            fmt::format("mesh {} outside (0, T/2]", mesh));
    if (modulus.is_zero()) {
        return 0.0;
    }
    const double w = modulus(2.0 * mesh);
    return w + w / std::pow(mesh, 0.5 * gamma) +
           dini_integral(modulus, gamma, 0.0, std::min(2.0 * mesh, 2.0 * T));
}

double two_subdivision_bound(const Modulus& modulus, double gamma, double mesh_coarse,
                             double mesh_fine)
{
    require(mesh_fine > 0.0 && mesh_fine <= mesh_coarse * (1.0 + 1e-12),
            ErrorCode::InvalidArgument, "the fine mesh must not exceed the coarse mesh");
    if (modulus.is_zero()) {
        return 0.0;
    }
    const double g2 = 0.5 * gamma;
    const double wc = modulus(2.0 * mesh_coarse);
    const double wf = modulus(2.0 * mesh_fine);
    return wc + wf / std::pow(mesh_fine, g2) + wc / std::pow(mesh_coarse, g2) +
           dini_integral(modulus, gamma, 0.0, 2.0 * mesh_coarse);
}

OmegaLambdaBounds omega_lambda_bounds(const Modulus& modulus, double gamma, double mesh)
{
    const double T = modulus.horizon();
    require(mesh > 0.0 && mesh <= 0.5 * T * (1.0 + 1e-12), ErrorCode::InvalidArgument,
            fmt::format("mesh {} outside (0, T/2]", mesh));
    const double g2 = 0.5 * gamma;
    const double h = mesh;
    OmegaLambdaBounds out;
    if (modulus.is_zero()) {
        return out;
    }
    const double w4 = modulus(4.0 * h);
    const double first = w4 / h * std::pow(2.0 * h, 1.0 - g2) / (1.0 - g2);
    double second = 0.0;
    if (2.0 * h < T) {
        second = std::pow(2.0, 1.0 + g2) * dini_integral(modulus, gamma, 4.0 * h, 2.0 * T);
    }
    out.integral = first + second;

    const auto branch1 = [&](double s) { return w4 / h * std::pow(s, -g2); };
    const auto branch2 = [&](double s) { return 2.0 * modulus(2.0 * s) / std::pow(s, 1.0 + g2); };
    out.integral_numeric = integrate(branch1, 0.0, 2.0 * h, 1e-10);
    if (2.0 * h < T) {
        std::vector<double> cuts{2.0 * h};
        for (double b : modulus.breakpoints()) {
            if (0.5 * b > 2.0 * h && 0.5 * b < T) {
                cuts.push_back(0.5 * b);
            }
        }
        cuts.push_back(T);
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            out.integral_numeric += integrate(branch2, cuts[i], cuts[i + 1], 1e-10);
        }
    }
    out.integral_bound =
        4.0 / (1.0 - g2) * sup_ratio(modulus, gamma) +
        std::pow(2.0, g2) * dini_integral(modulus, gamma, 0.0, 2.0 * T);

    out.sup = w4 / h * std::pow(2.0 * h, 1.0 - g2);
    if (2.0 * h < T) {
        std::vector<double> ts = logspace(2.0 * h, T, 10000);
        for (double b : modulus.breakpoints()) {
            if (0.5 * b >= 2.0 * h && 0.5 * b <= T) {
                ts.push_back(0.5 * b);
            }
        }
        for (double t : ts) {
            out.sup = std::max(out.sup, 2.0 * modulus(2.0 * t) / std::pow(t, g2));
        }
    }
    out.sup_bound = std::pow(2.0, 1.0 + g2) * sup_ratio(modulus, gamma);
    return out;
}

} // namespace formavg
