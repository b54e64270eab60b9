// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

// Discretized Volterra operators on a uniform grid 0 = s_0 < ... < s_n = T.
// Product integration: g (times the resolvent for Q) is taken piecewise
// linear, while the exponential and the piecewise linear factor
// A_L(t_i) - A_L(s) are integrated exactly, cells being split at the kinks
// of A_L. Moments of the exponential come from one block exponential per
// piece. The kernel K is block lower triangular with blocks K_ij, j <= i.
// Blocks act within coupling components of A_L, so each component gets its
// own dense kernel.

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "formavg/error.hpp"
#include "formavg/evolve.hpp"
#include "formavg/linalg.hpp"

namespace formavg
{

namespace
{

enum class Kind
{
    Q,
    P
};

// Kinks of A_L inside cell l, as distances sigma from s_{l+1}, with the
// values of A_L there.
struct CellKinks
{
    int cell = 0;
    std::vector<double> sigma;
    std::vector<Matrix> A;
};

// F_k = int_0^h e^{-vC} rho^{k-1} / (k-1)! dv with rho = h - v, k = 1..3,
// read off exp of a block upper-triangular matrix; E = e^{-hC}.
struct Moments
{
    Matrix E, F1, F2, F3;
};

Moments moments(const Matrix& C, double h)
{
    const Eigen::Index d = C.rows();
    Matrix N = Matrix::Zero(4 * d, 4 * d);
    N.topLeftCorner(d, d) = -h * C;
    for (Eigen::Index b = 0; b < 3; ++b) {
        N.block(b * d, (b + 1) * d, d, d).diagonal().setConstant(h);
    }
    const Matrix X = expm(N);
    return {X.block(0, 0, d, d), X.block(0, d, d, d), X.block(0, 2 * d, d, d),
            X.block(0, 3 * d, d, d)};
}

// Integrals over one piece [sigma_a, sigma_a + h] of a cell of length delta,
// where A_L(t_i) - A_L(s) = U + rho V, against the hat functions of the
// cell's right node (next) and left node (prev).
struct PieceWeights
{
    Matrix next, prev;
};

PieceWeights piece(const Moments& f, const Matrix& U, const Matrix& V, double sigma_b,
                   double delta)
{
    // Hat weight a + b rho; the integral is F1 a U + F2 (b U + a V) + 2 F3 b V.
    const auto w = [&](double a, double b) -> Matrix {
        Matrix out = f.F2 * (b * U + a * V) + (2.0 * b) * (f.F3 * V);
        if (a != 0.0) {
            out.noalias() += a * (f.F1 * U);
        }
        return out;
    };
    return {w(1.0 - sigma_b / delta, 1.0 / delta), w(sigma_b / delta, -1.0 / delta)};
}

// Dense (n+1)d x (n+1)d kernel; block (i, j) sits at rows i*d, cols j*d.
Matrix build_kernel(const std::vector<Matrix>& B, const std::vector<CellKinks>& kinks, double mu,
                    double delta, Kind kind)
{
    const int n = static_cast<int>(B.size()) - 1;
    const Eigen::Index d = B.front().rows();
    const Matrix I = Matrix::Identity(d, d);
    Matrix K = Matrix::Zero((n + 1) * d, (n + 1) * d);
    std::vector<Matrix> right(n + 1, I);
    if (kind == Kind::Q) {
        for (int j = 0; j <= n; ++j) {
            right[j] = (B[j] + mu * I).partialPivLu().inverse();
            require(right[j].allFinite(), ErrorCode::SingularResolvent,
                    "A_L(s) + mu is singular");
        }
    }
    std::vector<const CellKinks*> kinked(n, nullptr);
    for (const CellKinks& c : kinks) {
        kinked[c.cell] = &c;
    }
    Matrix power(d, d);
    Matrix tmp(d, d);
    for (int i = 1; i <= n; ++i) {
        const Matrix C = B[i] + mu * I;
        Moments cell = moments(C, delta);
        if (kind == Kind::Q) {
            cell.F1 = C * cell.F1;
            cell.F2 = C * cell.F2;
            cell.F3 = C * cell.F3;
        }
        power.setIdentity();
        for (int l = i - 1; l >= 0; --l) {
            PieceWeights w;
            if (kinked[l] == nullptr) {
                w = piece(cell, B[i] - B[l], (B[l] - B[l + 1]) / delta, delta, delta);
            } else {
                const CellKinks& ck = *kinked[l];
                w.next = Matrix::Zero(d, d);
                w.prev = Matrix::Zero(d, d);
                const std::size_t q = ck.sigma.size() + 1;
                for (std::size_t p = 0; p < q; ++p) {
                    const double sa = p == 0 ? 0.0 : ck.sigma[p - 1];
                    const double sb = p + 1 == q ? delta : ck.sigma[p];
                    const Matrix& Aa = p == 0 ? B[l + 1] : ck.A[p - 1];
                    const Matrix& Ab = p + 1 == q ? B[l] : ck.A[p];
                    Moments f = moments(C, sb - sa);
                    Matrix shift = sa > 0.0 ? expm(-sa * C) : I;
                    if (kind == Kind::Q) {
                        shift = C * shift;
                    }
                    const PieceWeights pw =
                        piece(f, B[i] - Ab, (Ab - Aa) / (sb - sa), sb, delta);
                    w.next.noalias() += shift * pw.next;
                    w.prev.noalias() += shift * pw.prev;
                }
            }
            tmp.noalias() = power * w.next;
            K.block(i * d, (l + 1) * d, d, d).noalias() += tmp * right[l + 1];
            tmp.noalias() = power * w.prev;
            K.block(i * d, l * d, d, d).noalias() += tmp * right[l];
            if (l > 0) {
                tmp.noalias() = power * cell.E;
                power = tmp;
            }
        }
    }
    return K;
}

struct Setup
{
    std::vector<std::vector<int>> comps;
    std::vector<std::vector<Matrix>> B;          // per component, per node
    std::vector<std::vector<CellKinks>> kinks;   // per component
    double delta = 0.0;
    int m = 0;
};

Setup setup(const InterpolatedFamily& fam, int n_grid)
{
    require(n_grid >= 2, ErrorCode::InvalidArgument, "n_grid must be >= 2");
    Setup s;
    s.delta = fam.T() / n_grid;
    s.m = fam.dim();
    std::vector<Matrix> full(n_grid + 1);
    for (int i = 0; i <= n_grid; ++i) {
        full[i] = fam(i == n_grid ? fam.T() : i * s.delta);
    }
    // Kinks within 1e-9 of a cell width from a node are ignored.
    std::vector<CellKinks> cells;
    for (double k : fam.kinks()) {
        const double x = k / s.delta;
        const int l = std::clamp(static_cast<int>(std::floor(x)), 0, n_grid - 1);
        const double sigma = (l + 1 - x) * s.delta;
        if (sigma < 1e-9 * s.delta || sigma > (1.0 - 1e-9) * s.delta) {
            continue;
        }
        if (cells.empty() || cells.back().cell != l) {
            cells.push_back({l, {}, {}});
        }
        cells.back().sigma.push_back(sigma);
        cells.back().A.push_back(fam(k));
    }
    for (CellKinks& c : cells) {
        // Kinks arrive in increasing s, hence decreasing sigma.
        std::reverse(c.sigma.begin(), c.sigma.end());
        std::reverse(c.A.begin(), c.A.end());
    }
    std::vector<Matrix> all = full;
    for (const CellKinks& c : cells) {
        all.insert(all.end(), c.A.begin(), c.A.end());
    }
    s.comps = coupling_components(all);
    s.B.resize(s.comps.size());
    s.kinks.resize(s.comps.size());
    for (std::size_t c = 0; c < s.comps.size(); ++c) {
        s.B[c].reserve(full.size());
        for (const Matrix& A : full) {
            s.B[c].push_back(submatrix(A, s.comps[c]));
        }
        for (const CellKinks& ck : cells) {
            CellKinks sub{ck.cell, ck.sigma, {}};
            for (const Matrix& A : ck.A) {
                sub.A.push_back(submatrix(A, s.comps[c]));
            }
            s.kinks[c].push_back(std::move(sub));
        }
    }
    return s;
}

double q_at(const InterpolatedFamily& fam, double mu, int n_grid)
{
    const Setup s = setup(fam, n_grid);
    // Trapezoid weights W; the L2 norm is that of W^{1/2} K W^{-1/2}.
    RealVector sw = RealVector::Constant(n_grid + 1, std::sqrt(s.delta));
    sw[0] = sw[n_grid] = std::sqrt(0.5 * s.delta);
    double best = 0.0;
    for (std::size_t c = 0; c < s.comps.size(); ++c) {
        const Eigen::Index d = static_cast<Eigen::Index>(s.comps[c].size());
        Matrix K = build_kernel(s.B[c], s.kinks[c], mu, s.delta, Kind::Q);
        for (int i = 0; i <= n_grid; ++i) {
            K.middleRows(i * d, d) *= sw[i];
            K.middleCols(i * d, d) /= sw[i];
        }
        best = std::max(best, largest_singular_value(K, 11 + c));
    }
    return best;
}

struct PResult
{
    double value = 0.0;
    double upper = 0.0;
};

// Sup-norm operator: max over rows i of sup_{|h_j| <= 1} |sum_j K_ij h_j|,
// where h_j ranges over unit vectors of the full space.
PResult p_at(const InterpolatedFamily& fam, double mu, int n_grid, std::uint64_t seed,
             int n_random)
{
    const Setup s = setup(fam, n_grid);
    const int n = n_grid;
    const int m = s.m;
    const std::size_t nc = s.comps.size();
    std::vector<Matrix> K;
    K.reserve(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        K.push_back(build_kernel(s.B[c], s.kinks[c], mu, s.delta, Kind::P));
    }
    PResult out;
    for (int i = 1; i <= n; ++i) {
        double row = 0.0;
        for (int j = 0; j <= i; ++j) {
            double nb = 0.0;
            for (std::size_t c = 0; c < nc; ++c) {
                const Eigen::Index d = static_cast<Eigen::Index>(s.comps[c].size());
                const auto blk = K[c].block(i * d, j * d, d, d);
                nb = std::max(nb, d == 1 ? std::abs(blk(0, 0)) : Matrix(blk).operatorNorm());
            }
            row += nb;
        }
        out.upper = std::max(out.upper, row);
    }

    // Start functions: random unit vectors at each node, then constant
    // coordinate functions. Stored per component as stacked node vectors.
    const int n_starts = n_random + m;
    std::vector<Matrix> H(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        H[c] = Matrix::Zero((n + 1) * static_cast<Eigen::Index>(s.comps[c].size()), n_starts);
    }
    std::vector<int> comp_of(m), slot_of(m);
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t a = 0; a < s.comps[c].size(); ++a) {
            comp_of[s.comps[c][a]] = static_cast<int>(c);
            slot_of[s.comps[c][a]] = static_cast<int>(a);
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Vector h(m);
    for (int r = 0; r < n_random; ++r) {
        for (int j = 0; j <= n; ++j) {
            for (int a = 0; a < m; ++a) {
                h[a] = Complex(nd(rng), nd(rng));
            }
            h.normalize();
            for (int a = 0; a < m; ++a) {
                const auto d = static_cast<Eigen::Index>(s.comps[comp_of[a]].size());
                H[comp_of[a]](j * d + slot_of[a], r) = h[a];
            }
        }
    }
    for (int a = 0; a < m; ++a) {
        const auto d = static_cast<Eigen::Index>(s.comps[comp_of[a]].size());
        for (int j = 0; j <= n; ++j) {
            H[comp_of[a]](j * d + slot_of[a], n_random + a) = 1.0;
        }
    }
    Eigen::MatrixXd vals = Eigen::MatrixXd::Zero(n + 1, n_starts);
    for (std::size_t c = 0; c < nc; ++c) {
        const Eigen::Index d = static_cast<Eigen::Index>(s.comps[c].size());
        const Matrix Y = K[c] * H[c];
        for (int i = 1; i <= n; ++i) {
            vals.row(i) += Y.middleRows(i * d, d).colwise().squaredNorm();
        }
    }

    std::vector<Vector> y(nc), g(nc), hc(nc);
    RealVector node_norm(n + 1);
    for (int i = 1; i <= n; ++i) {
        Eigen::Index r0 = 0;
        double best = std::sqrt(vals.row(i).maxCoeff(&r0));
        for (std::size_t c = 0; c < nc; ++c) {
            hc[c] = H[c].col(r0);
        }
        const auto row_value = [&] {
            double acc = 0.0;
            for (std::size_t c = 0; c < nc; ++c) {
                const Eigen::Index d = static_cast<Eigen::Index>(s.comps[c].size());
                y[c].noalias() = K[c].middleRows(i * d, d) * hc[c];
                acc += y[c].squaredNorm();
            }
            return std::sqrt(acc);
        };
        row_value();
        for (int it = 0; it < 500; ++it) {
            // h_j <- K_ij^* y / |K_ij^* y| over the full space.
            node_norm.setZero();
            for (std::size_t c = 0; c < nc; ++c) {
                const Eigen::Index d = static_cast<Eigen::Index>(s.comps[c].size());
                g[c].noalias() = K[c].middleRows(i * d, d).adjoint() * y[c];
                for (int j = 0; j <= n; ++j) {
                    node_norm[j] += g[c].segment(j * d, d).squaredNorm();
                }
            }
            for (std::size_t c = 0; c < nc; ++c) {
                const Eigen::Index d = static_cast<Eigen::Index>(s.comps[c].size());
                for (int j = 0; j <= i; ++j) {
                    if (node_norm[j] > 0.0) {
                        hc[c].segment(j * d, d) = g[c].segment(j * d, d) / std::sqrt(node_norm[j]);
                    }
                }
            }
            const double v = row_value();
            const bool settled = v - best <= 1e-13 * std::max(1.0, v);
            best = std::max(best, v);
            if (settled) {
                break;
            }
        }
        out.value = std::max(out.value, best);
    }
    return out;
}

// Values under 1e-12 are rounding noise of a vanishing operator.
double doubling_change(double value, double doubled)
{
    return std::abs(doubled - value) / std::max(doubled, 1e-12);
}

} // namespace

VolterraEstimate q_norm_estimate(const InterpolatedFamily& fam, double mu, int n_grid)
{
    require(mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
    VolterraEstimate e;
    e.n_grid = n_grid;
    e.value = q_at(fam, mu, n_grid);
    e.doubled = q_at(fam, mu, 2 * n_grid);
    e.change = doubling_change(e.value, e.doubled);
    return e;
}

double q_norm(const InterpolatedFamily& fam, double mu, int n_grid)
{
    require(mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
    return q_at(fam, mu, n_grid);
}

VolterraEstimate p_norm_estimate(const InterpolatedFamily& fam, double mu, int n_grid,
                                 std::uint64_t seed, int n_random)
{
    require(mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
    require(n_random >= 0, ErrorCode::InvalidArgument, "n_random must be nonnegative");
    VolterraEstimate e;
    e.n_grid = n_grid;
    const PResult a = p_at(fam, mu, n_grid, seed, n_random);
    const PResult b = p_at(fam, mu, 2 * n_grid, seed, n_random);
    e.value = a.value;
    e.upper = a.upper;
    e.doubled = b.value;
    e.change = doubling_change(a.value, b.value);
    return e;
}

double p_norm(const InterpolatedFamily& fam, double mu, int n_grid, std::uint64_t seed)
{
    require(mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
    return p_at(fam, mu, n_grid, seed, 1000).value;
}

} // namespace formavg
