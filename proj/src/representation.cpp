// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "formavg/error.hpp"
#include "formavg/evolve.hpp"
#include "formavg/linalg.hpp"
#include "formavg/quadrature.hpp"

namespace formavg
{

namespace
{

constexpr int kGradingLevels = 36;
constexpr int kPanelOrder = 8;

// Panel boundaries on [0, t]: subdivision nodes, source jumps, and dyadic
// grading toward both ends.
std::vector<double> panel_cuts(double t, const InterpolatedFamily& fam,
                               const std::vector<double>& jumps)
{
    std::vector<double> cuts{0.0, t};
    for (double k : fam.subdivision().points()) {
        if (k > 0.0 && k < t) {
            cuts.push_back(k);
        }
    }
    for (double b : jumps) {
        if (b > 0.0 && b < t) {
            cuts.push_back(b);
        }
    }
    for (int j = 1; j <= kGradingLevels; ++j) {
        const double d = std::ldexp(t, -j);
        cuts.push_back(d);
        cuts.push_back(t - d);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> out;
    for (double c : cuts) {
        if (out.empty() || c - out.back() > 1e-13 * t) {
            out.push_back(c);
        }
    }
    out.back() = t;
    return out;
}

struct Node
{
    double s;
    double w;
};

std::vector<Node> panel_nodes(const std::vector<double>& cuts, bool split)
{
    const GaussRule& rule = gauss_legendre(kPanelOrder);
    std::vector<Node> nodes;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double a = cuts[c];
        const double b = cuts[c + 1];
        const int parts = split ? 2 : 1;
        for (int p = 0; p < parts; ++p) {
            const double lo = a + (b - a) * p / parts;
            const double hi = p + 1 == parts ? b : a + (b - a) * (p + 1) / parts;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                nodes.push_back({0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[i],
                                 0.5 * (hi - lo) * rule.weights[i]});
            }
        }
    }
    return nodes;
}

std::size_t nearest(const std::vector<double>& times, double s)
{
    auto it = std::lower_bound(times.begin(), times.end(), s);
    if (it == times.end()) {
        return times.size() - 1;
    }
    std::size_t j = static_cast<std::size_t>(it - times.begin());
    if (j > 0 && s - times[j - 1] < *it - s) {
        --j;
    }
    return j;
}

} // namespace

RepresentationTerms at_terms(const InterpolatedFamily& fam, const SourceData& data,
                             const Trajectory& u_lam, const GelfandTriple& triple,
                             int max_eval)
{
    require(u_lam.columns() == 1, ErrorCode::InvalidArgument,
            "at_terms expects a single-column trajectory");
    require(static_cast<bool>(u_lam.problem), ErrorCode::InvalidArgument,
            "at_terms needs the trajectory's problem to evaluate u at quadrature nodes");
    require(triple.dim() == fam.dim(), ErrorCode::DimensionMismatch,
            "triple and family differ in dimension");
    require(max_eval >= 1, ErrorCode::InvalidArgument, "max_eval must be >= 1");
    const std::size_t N = u_lam.grid.size();
    std::vector<std::size_t> idx;
    for (int k = 1; k <= max_eval; ++k) {
        const std::size_t j = static_cast<std::size_t>(
            std::llround(static_cast<double>(k) * static_cast<double>(N - 1) / max_eval));
        if (j >= 1 && (idx.empty() || j != idx.back())) {
            idx.push_back(j);
        }
    }

    struct Plan
    {
        double t;
        std::vector<Node> coarse;
        std::vector<Node> fine;
    };
    std::vector<Plan> plans;
    std::vector<double> all{0.0, fam.T()};
    for (std::size_t j : idx) {
        const double t = u_lam.grid.times[j];
        const auto cuts = panel_cuts(t, fam, data.breakpoints);
        Plan p{t, panel_nodes(cuts, false), panel_nodes(cuts, true)};
        for (const auto& n : p.coarse) {
            all.push_back(n.s);
        }
        for (const auto& n : p.fine) {
            all.push_back(n.s);
        }
        plans.push_back(std::move(p));
    }
    const TimeGrid nodes_grid = point_grid(all);
    const Trajectory at_nodes = resample(u_lam, nodes_grid);

    RepresentationTerms out;
    for (std::size_t k = 0; k < plans.size(); ++k) {
        const Plan& p = plans[k];
        const Matrix B = fam(p.t);
        const SemigroupEvaluator ev(B);
        const auto integrate_terms = [&](const std::vector<Node>& nodes, Vector& u2, Vector& u3) {
            u2 = Vector::Zero(B.rows());
            u3 = Vector::Zero(B.rows());
            for (const Node& n : nodes) {
                const Vector us = at_nodes.value(nearest(nodes_grid.times, n.s));
                if (data.has_forcing()) {
                    u2 += n.w * ev.apply(p.t - n.s, data.f(n.s));
                }
                u3 += n.w * ev.apply(p.t - n.s, (B - fam(n.s)) * us);
            }
        };
        Vector u2c, u3c, u2, u3;
        integrate_terms(p.coarse, u2c, u3c);
        integrate_terms(p.fine, u2, u3);
        const Vector u1 = ev.apply(p.t, data.u0);
        const Vector u = u_lam.value(idx[k]);
        out.quadrature_change =
            std::max(out.quadrature_change, (u2 + u3 - u2c - u3c).norm());
        out.residual = std::max(out.residual, (u - u1 - u2 - u3).norm());
        out.times.push_back(p.t);
        out.u.push_back(u);
        out.u1.push_back(u1);
        out.u2.push_back(u2);
        out.u3.push_back(u3);
    }
    const double scale = 1.0 + data.u0.norm();
    if (out.quadrature_change > 1e-9 * scale) {
        fail(ErrorCode::QuadratureNotConverged,
             fmt::format("representation quadrature changed by {:.3e} under panel halving",
                         out.quadrature_change));
    }
    return out;
}

} // namespace formavg
