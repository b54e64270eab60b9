// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/linalg.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "formavg/error.hpp"

namespace formavg
{

Matrix expm(const Matrix& A)
{
    Matrix E = A.exp();
    require(E.allFinite(), ErrorCode::ExponentialNotConverged,
            fmt::format("matrix exponential of a {}x{} matrix is not finite", A.rows(), A.cols()));
    return E;
}

Matrix sqrtm(const Matrix& A)
{
    return A.sqrt();
}

SemigroupEvaluator::SemigroupEvaluator(const Matrix& B) : B_(B)
{
    const Eigen::Index m = B.rows();
    if (m == 0) {
        return;
    }
    Eigen::ComplexEigenSolver<Matrix> eig(B);
    if (eig.info() != Eigen::Success) {
        return;
    }
    V_ = eig.eigenvectors();
    lambda_ = eig.eigenvalues();
    Eigen::JacobiSVD<Matrix> svd(V_);
    const auto& sv = svd.singularValues();
    if (sv[m - 1] <= 0.0 || sv[0] / sv[m - 1] > 1e4) {
        return;
    }
    V_inv_ = V_.inverse();
    const double scale = std::max(1e-300, B.cwiseAbs().maxCoeff());
    if ((B * V_ - V_ * lambda_.asDiagonal()).norm() > 1e-12 * scale * std::sqrt(double(m))) {
        return;
    }
    for (Eigen::Index k = 0; k < m; ++k) {
        if (lambda_[k].real() < -1e-12 * scale) {
            return;
        }
    }
    const double probe = 1.0 / scale;
    const Matrix pade = expm(-probe * B_);
    Matrix mine = V_ * (-probe * lambda_).array().exp().matrix().asDiagonal() * V_inv_;
    if ((mine - pade).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, pade.cwiseAbs().maxCoeff())) {
        return;
    }
    eigen_ok_ = true;
}

Matrix SemigroupEvaluator::operator()(double tau) const
{
    require(tau >= 0.0, ErrorCode::InvalidArgument, "semigroup time must be nonnegative");
    if (eigen_ok_) {
        return V_ * (-tau * lambda_).array().exp().matrix().asDiagonal() * V_inv_;
    }
    return expm(-tau * B_);
}

Vector SemigroupEvaluator::apply(double tau, const Vector& x) const
{
    if (eigen_ok_) {
        Vector y = V_inv_ * x;
        y.array() *= (-tau * lambda_).array().exp();
        return V_ * y;
    }
    return (*this)(tau) * x;
}

std::vector<std::vector<int>> coupling_components(const std::vector<Matrix>& matrices)
{
    require(!matrices.empty(), ErrorCode::InvalidArgument, "no matrices given");
    const int m = static_cast<int>(matrices.front().rows());
    std::vector<int> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    const auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const Matrix& A : matrices) {
        require(A.rows() == m && A.cols() == m, ErrorCode::DimensionMismatch,
                "coupling_components needs square matrices of equal size");
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                if (i != j && A(i, j) != Complex(0.0, 0.0)) {
                    const int a = find(i);
                    const int b = find(j);
                    if (a != b) {
                        parent[std::max(a, b)] = std::min(a, b);
                    }
                }
            }
        }
    }
    std::vector<std::vector<int>> out;
    std::vector<int> slot(m, -1);
    for (int i = 0; i < m; ++i) {
        const int r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<int>(out.size());
            out.emplace_back();
        }
        out[slot[r]].push_back(i);
    }
    return out;
}

double largest_singular_value(const Matrix& N, std::uint64_t seed, double rel_tol)
{
    const double frob = N.norm();
    if (frob <= 1e-13) {
        return frob; // rounding noise
    }
    const Eigen::Index dim = std::min(N.rows(), N.cols());
    const Eigen::Index rows = N.rows();
    const Eigen::Index cols = N.cols();
    const int kmax = static_cast<int>(std::min<Eigen::Index>(dim, 800));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::Index cap = std::min<Eigen::Index>(kmax, 64);
    Matrix V(cols, cap + 1);
    Matrix U(rows, cap);
    std::vector<double> alpha;
    std::vector<double> beta;
    Vector v(cols);
    for (Eigen::Index r = 0; r < cols; ++r) {
        v[r] = Complex(nd(rng), nd(rng));
    }
    V.col(0) = v.normalized();
    const auto top = [&](int k) {
        Eigen::MatrixXd Bk = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) {
            Bk(i, i) = alpha[i];
            if (i + 1 < k) {
                Bk(i, i + 1) = beta[i];
            }
        }
        return Eigen::JacobiSVD<Eigen::MatrixXd>(Bk).singularValues()[0];
    };
    std::vector<double> history;
    Vector u(rows);
    for (int k = 0; k < kmax; ++k) {
        if (k == cap) {
            cap = std::min<Eigen::Index>(kmax, 2 * cap);
            V.conservativeResize(Eigen::NoChange, cap + 1);
            U.conservativeResize(Eigen::NoChange, cap);
        }
        u.noalias() = N * V.col(k);
        if (k > 0) {
            u -= beta[k - 1] * U.col(k - 1);
        }
        u -= U.leftCols(k) * (U.leftCols(k).adjoint() * u);
        const double a = u.norm();
        alpha.push_back(a);
        if (a <= 1e-14 * frob) {
            return top(k + 1);
        }
        U.col(k) = u / a;
        v.noalias() = N.adjoint() * U.col(k);
        v -= a * V.col(k);
        v -= V.leftCols(k + 1) * (V.leftCols(k + 1).adjoint() * v);
        const double bnorm = v.norm();
        beta.push_back(bnorm);
        const double sigma = top(k + 1);
        if (bnorm <= 1e-14 * frob || k + 1 == dim) {
            return sigma;
        }
        // The top of the spectrum is often nearly continuous; judge
        // convergence over a window of steps.
        history.push_back(sigma);
        if (history.size() > 10 && sigma - history[history.size() - 11] <= rel_tol * sigma) {
            return sigma;
        }
        V.col(k + 1) = v / bnorm;
    }
    fail(ErrorCode::PowerIterationStalled,
         fmt::format("Lanczos bidiagonalization did not settle (last estimate {:.6g})",
                     history.back()));
}

Matrix submatrix(const Matrix& A, const std::vector<int>& idx)
{
    const int d = static_cast<int>(idx.size());
    Matrix out(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            out(i, j) = A(idx[i], idx[j]);
        }
    }
    return out;
}

} // namespace formavg
