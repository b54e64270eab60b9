// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "formavg/error.hpp"
#include "formavg/evolve.hpp"
#include "formavg/linalg.hpp"
#include "formavg/quadrature.hpp"

namespace formavg
{

SectorGeometry sector_geometry(double M, double alpha, double margin, int n_radii)
{
    require(alpha > 0.0 && M >= alpha, ErrorCode::InvalidArgument,
            "sector geometry needs 0 < alpha <= M");
    require(margin > 0.0 && n_radii >= 2, ErrorCode::InvalidArgument,
            "sector geometry needs a positive margin and at least two radii");
    SectorGeometry g;
    g.theta = 0.5 * std::numbers::pi - std::atan(M / alpha);
    g.margin = margin;
    g.rays = {std::numbers::pi, g.theta + margin, -(g.theta + margin)};
    g.radii = logspace(1.0, 1e6, n_radii);
    return g;
}

std::vector<ResolventEstimate> resolvent_suite(const Matrix& A, const GelfandTriple& triple,
                                               const SectorGeometry& geometry, double fit_from)
{
    require(A.rows() == triple.dim() && A.cols() == triple.dim(), ErrorCode::DimensionMismatch,
            "matrix and triple differ in dimension");
    const double g = triple.gamma();
    struct Pair
    {
        Scale from;
        Scale to;
        double exponent;
    };
    const Pair pairs[] = {
        {Scale::VPrimeGamma, Scale::H, 1.0 - 0.5 * g},
        {Scale::V, Scale::V, 1.0},
        {Scale::H, Scale::V, 0.5},
        {Scale::VPrime, Scale::H, 0.5},
        {Scale::VPrimeGamma, Scale::V, 0.5 * (1.0 - g)},
    };
    const Eigen::Index m = A.rows();
    const Matrix I = Matrix::Identity(m, m);
    std::vector<ResolventEstimate> out;
    for (double phi : geometry.rays) {
        std::vector<std::vector<double>> norms(std::size(pairs));
        for (double r : geometry.radii) {
            const Complex lambda = std::polar(r, phi);
            const Matrix L = lambda * I - A;
            const Eigen::PartialPivLU<Matrix> lu(L);
            const Matrix R = lu.inverse();
            const double res = (L * R - I).cwiseAbs().maxCoeff();
            if (!R.allFinite() || res > 1e-6) {
                throw Error(ErrorCode::SingularResolvent,
                            fmt::format("lambda = {:.6g}{:+.6g}i is numerically in the spectrum",
                                        lambda.real(), lambda.imag()),
                            Witness{r, phi, Vector()});
            }
            for (std::size_t p = 0; p < std::size(pairs); ++p) {
                norms[p].push_back(triple.op_norm(R, pairs[p].from, pairs[p].to));
            }
        }
        for (std::size_t p = 0; p < std::size(pairs); ++p) {
            ResolventEstimate e;
            e.from = pairs[p].from;
            e.to = pairs[p].to;
            e.exponent = pairs[p].exponent;
            e.ray = phi;
            std::vector<double> lx;
            std::vector<double> ly;
            for (std::size_t k = 0; k < geometry.radii.size(); ++k) {
                const double r = geometry.radii[k];
                e.fit.max_ratio =
                    std::max(e.fit.max_ratio, norms[p][k] * std::pow(1.0 + r, e.exponent));
                if (r >= fit_from * (1.0 - 1e-12)) {
                    lx.push_back(std::log(r));
                    ly.push_back(std::log(norms[p][k]));
                }
            }
            require(lx.size() >= 2, ErrorCode::InvalidArgument,
                    "fewer than two radii in the fit window");
            const LineFit f = fit_line(lx, ly);
            e.fit.slope = f.slope;
            e.fit.constant = std::exp(f.intercept);
            e.fit.r2 = f.r2;
            out.push_back(e);
        }
    }
    return out;
}

std::vector<SemigroupEstimate> semigroup_suite(const Matrix& A, const GelfandTriple& triple,
                                               const std::vector<double>& s_samples)
{
    require(A.rows() == triple.dim() && A.cols() == triple.dim(), ErrorCode::DimensionMismatch,
            "matrix and triple differ in dimension");
    require(s_samples.size() >= 3, ErrorCode::InvalidArgument, "need at least three s samples");
    require(std::is_sorted(s_samples.begin(), s_samples.end()) && s_samples.front() > 0.0,
            ErrorCode::InvalidArgument, "s samples must be positive and increasing");
    const double g = triple.gamma();
    const SemigroupEvaluator ev(A);
    struct Item
    {
        int item;
        const char* name;
        double exponent;
        std::function<double(double)> norm;
    };
    const std::vector<Item> items = {
        {6, "e^{-sA}: V'_gamma -> H", 0.5 * g,
         [&](double s) { return triple.op_norm(ev(s), Scale::VPrimeGamma, Scale::H); }},
        {7, "e^{-sA}: V'_gamma -> V", 0.5 * (1.0 + g),
         [&](double s) { return triple.op_norm(ev(s), Scale::VPrimeGamma, Scale::V); }},
        {8, "e^{-sA}: V' -> V", 0.5,
         [&](double s) { return triple.op_norm(ev(s), Scale::VPrime, Scale::V); }},
        {9, "A e^{-sA}: H -> H", 1.0, [&](double s) { return spectral_norm(A * ev(s)); }},
        {10, "e^{-sA}: V -> V", 0.0,
         [&](double s) { return triple.op_norm(ev(s), Scale::V, Scale::V); }},
    };
    std::vector<SemigroupEstimate> out;
    for (const Item& it : items) {
        SemigroupEstimate e;
        e.item = it.item;
        e.name = it.name;
        e.exponent = it.exponent;
        const auto weighted = [&](double s) {
            return s == 0.0 ? it.norm(0.0) : it.norm(s) * std::pow(s, it.exponent);
        };
        std::vector<double> vals;
        std::vector<double> lx;
        std::vector<double> ly;
        std::size_t best = 0;
        for (std::size_t k = 0; k < s_samples.size(); ++k) {
            const double s = s_samples[k];
            const double n = it.norm(s);
            vals.push_back(n * std::pow(s, it.exponent));
            if (vals[k] > vals[best]) {
                best = k;
            }
            if (n > 0.0) {
                lx.push_back(std::log(s));
                ly.push_back(std::log(n));
            }
        }
        double sup = vals[best];
        double s_at = s_samples[best];
        // Local refinement of the maximum in log s.
        const double lo = std::log(s_samples[best == 0 ? 0 : best - 1]);
        const double hi = std::log(s_samples[std::min(best + 1, s_samples.size() - 1)]);
        if (hi > lo) {
            const auto r = boost::math::tools::brent_find_minima(
                [&](double x) { return -weighted(std::exp(x)); }, lo, hi, 40);
            if (-r.second > sup) {
                sup = -r.second;
                s_at = std::exp(r.first);
            }
        }
        if (it.exponent == 0.0) {
            const double at0 = weighted(0.0);
            if (at0 >= sup) {
                sup = at0;
                s_at = 0.0;
            }
        }
        require(std::isfinite(sup), ErrorCode::ExponentialNotConverged,
                fmt::format("semigroup item {} produced a non-finite value", it.item));
        e.s_at = s_at;
        e.fit.constant = sup;
        e.fit.max_ratio = sup;
        if (lx.size() >= 2) {
            const LineFit f = fit_line(lx, ly);
            e.fit.slope = f.slope;
            e.fit.r2 = f.r2;
        }
        out.push_back(e);
    }
    return out;
}

SqrtBounds sqrt_check(const Matrix& A, const GelfandTriple& triple)
{
    require(A.rows() == triple.dim() && A.cols() == triple.dim(), ErrorCode::DimensionMismatch,
            "matrix and triple differ in dimension");
    const double scale = A.norm();
    Matrix R;
    if ((A - A.adjoint()).norm() <= 1e-14 * scale) {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.adjoint()));
        require(eig.eigenvalues().minCoeff() > 0.0, ErrorCode::InvalidArgument,
                "Hermitian input is not positive definite");
        R = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
            eig.eigenvectors().adjoint();
    } else {
        R = sqrtm(A);
    }
    SqrtBounds b;
    b.residual = (R * R - A).norm() / std::max(scale, 1e-300);
    if (!(b.residual <= 1e-10)) {
        fail(ErrorCode::SqrtResidualTooLarge,
             fmt::format("square root residual {:.3e} exceeds 1e-10", b.residual));
    }
    const Eigen::JacobiSVD<Matrix> svd(triple.weighted(R, Scale::V, Scale::H));
    const auto& sv = svd.singularValues();
    b.upper = sv[0];
    b.lower = sv[sv.size() - 1];
    return b;
}

namespace
{

// Samples sqrt(w) [S^{1/2} u; u; u'] of the discrete solution map at the
// weighted grid nodes, one column per basis input: m initial values
// e_j / sqrt(s_j), then sources amp * e_j on cell c in column m + c m + j.
// The map is linear, so each cell is integrated once for the propagator
// and the response to a unit constant source, and the basis solutions are
// assembled from those.
class GapSampler
{
public:
    GapSampler(const FormFamily& form, const std::vector<double>& kinks, int n_grid, double tol)
        : triple_(form.triple), n_grid_(n_grid), T_(form.T), delta_(form.T / n_grid)
    {
        require(n_grid >= 32, ErrorCode::InvalidArgument,
                "solution operator gap needs n_grid >= 32");
        GridSpec spec;
        spec.T = T_;
        spec.density = static_cast<int>(std::ceil(n_grid / T_ - 1e-9));
        spec.breakpoints = kinks;
        for (int c = 1; c < n_grid; ++c) {
            spec.breakpoints.push_back(c * delta_);
        }
        for (double b : form.modulus.breakpoints()) {
            spec.breakpoints.push_back(b);
        }
        spec.grading_levels = 12;
        spec.gauss_points = 3;
        grid_ = make_time_grid(spec);
        options_.tol = tol;
    }

    Matrix sample(const OperatorPath& path) const
    {
        const Eigen::Index m = triple_.dim();
        const Eigen::Index p = m * (1 + n_grid_);
        const double amp = 1.0 / std::sqrt(delta_);
        const RealVector sv = triple_.scale_diagonal(Scale::V);
        std::size_t n_nodes = 0;
        for (double w : grid_.weights) {
            n_nodes += w > 0.0 ? 1 : 0;
        }
        Matrix G(3 * m * static_cast<Eigen::Index>(n_nodes), p);
        Matrix U = Matrix::Zero(m, p);
        for (Eigen::Index j = 0; j < m; ++j) {
            U(j, j) = 1.0 / std::sqrt(triple_.weights()[j]);
        }
        BatchData local;
        local.U0 = Matrix::Zero(m, 2 * m);
        local.U0.leftCols(m).setIdentity();
        local.F = [m](double, double) {
            Matrix F = Matrix::Zero(m, 2 * m);
            F.rightCols(m).setIdentity();
            return F;
        };
        std::size_t next = 0;
        Eigen::Index row = 0;
        for (int c = 0; c < n_grid_; ++c) {
            const double a = c * delta_;
            const double b = c + 1 == n_grid_ ? T_ : (c + 1) * delta_;
            const double len = b - a;
            std::vector<double> taus{0.0, len};
            std::vector<std::size_t> nodes;
            while (next < grid_.size() && grid_.times[next] <= b + 1e-13 * T_) {
                if (grid_.weights[next] > 0.0) {
                    nodes.push_back(next);
                    taus.push_back(grid_.times[next] - a);
                }
                ++next;
            }
            if (next > 0) {
                --next; // b is also the first point of the next cell
            }
            OperatorPath lp;
            lp.eval = [&path, a, this](double tau) { return path.eval(std::min(a + tau, T_)); };
            for (double k : path.kinks) {
                if (k > a && k < b) {
                    lp.kinks.push_back(k - a);
                }
            }
            lp.T = len;
            lp.dim = static_cast<int>(m);
            lp.id = path.id;
            const TimeGrid lg = point_grid(taus);
            const Trajectory tr = solve_batch(lp, local, lg, options_);
            const auto at = [&](double tau) {
                auto it = std::lower_bound(lg.times.begin(), lg.times.end(), tau - 1e-12 * len);
                return static_cast<std::size_t>(it - lg.times.begin());
            };
            for (std::size_t j : nodes) {
                const std::size_t k = at(grid_.times[j] - a);
                const Matrix& Y = tr.values[k];
                const Matrix& D = tr.derivs[k];
                Matrix u = Y.leftCols(m) * U;
                Matrix du = D.leftCols(m) * U;
                u.middleCols(m + c * m, m) += amp * Y.rightCols(m);
                du.middleCols(m + c * m, m) += amp * D.rightCols(m);
                const double w = std::sqrt(grid_.weights[j]);
                G.middleRows(row, m) = w * (sv.asDiagonal() * u);
                G.middleRows(row + m, m) = w * u;
                G.middleRows(row + 2 * m, m) = w * du;
                row += 3 * m;
            }
            const Matrix& Yend = tr.values.back();
            Matrix Unext = Yend.leftCols(m) * U;
            Unext.middleCols(m + c * m, m) += amp * Yend.rightCols(m);
            U = std::move(Unext);
        }
        require(row == G.rows(), ErrorCode::GridMismatch, "gap sampling missed grid nodes");
        return G;
    }

private:
    GelfandTriple triple_;
    int n_grid_;
    double T_;
    double delta_;
    TimeGrid grid_;
    SolverOptions options_;
};

SolutionOperatorGap gap_against(const Matrix& G_ref, const GapSampler& sampler,
                                const FormFamily& form, const InterpolatedFamily& fam)
{
    const Matrix D = sampler.sample(path_of(fam)) - G_ref;
    const Eigen::Index m = form.dim();
    SolutionOperatorGap gap;
    gap.mesh = fam.mesh();
    gap.gap_full = largest_singular_value(D, 3, 1e-8);
    gap.gap_inhom = largest_singular_value(D.rightCols(D.cols() - m), 5, 1e-8);
    gap.bracket = bracket_bound(form.modulus, form.gamma(), fam.mesh());
    return gap;
}

Extension extension_for(const FormFamily& form)
{
    return form.defined_beyond_horizon ? Extension::Continue : Extension::Freeze;
}

} // namespace

SolutionOperatorGap solution_operator_gap(const FormFamily& form, const InterpolatedFamily& fam,
                                          int n_grid, double tol)
{
    require(fam.dim() == form.dim(), ErrorCode::DimensionMismatch,
            "family and form differ in dimension");
    const GapSampler sampler(form, fam.kinks(), n_grid, tol);
    return gap_against(sampler.sample(path_of(form)), sampler, form, fam);
}

std::vector<SolutionOperatorGap> solution_operator_gaps(const FormFamily& form,
                                                        const std::vector<int>& ns, int n_grid,
                                                        double tol)
{
    require(!ns.empty(), ErrorCode::InvalidArgument, "no subdivisions given");
    std::vector<InterpolatedFamily> fams;
    std::vector<double> kinks;
    for (int n : ns) {
        fams.push_back(discretize(form, n, 8, extension_for(form)));
        const auto k = fams.back().kinks();
        kinks.insert(kinks.end(), k.begin(), k.end());
    }
    const GapSampler sampler(form, kinks, n_grid, tol);
    const Matrix G_ref = sampler.sample(path_of(form));
    std::vector<SolutionOperatorGap> out;
    for (const auto& fam : fams) {
        out.push_back(gap_against(G_ref, sampler, form, fam));
    }
    return out;
}

} // namespace formavg
