// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "formavg/error.hpp"
#include "formavg/evolve.hpp"
#include "formavg/quadrature.hpp"

namespace formavg
{

OperatorPath path_of(const FormFamily& form)
{
    auto shared = std::make_shared<const FormFamily>(form);
    return OperatorPath{[shared](double t) { return (*shared)(t); }, {}, "exact:" + form.name,
                        form.T, form.dim()};
}

OperatorPath path_of(const InterpolatedFamily& fam)
{
    auto shared = std::make_shared<const InterpolatedFamily>(fam);
    const std::string base = fam.base() ? fam.base()->name : "family";
    return OperatorPath{[shared](double t) { return (*shared)(t); }, fam.kinks(),
                        fmt::format("interpolated:{}:n={}", base, fam.subdivision().n), fam.T(),
                        fam.dim()};
}

OperatorPath path_of(std::function<Matrix(double)> eval, double T, int dim, std::string id)
{
    return OperatorPath{std::move(eval), {}, std::move(id), T, dim};
}

bool TimeGrid::same_as(const TimeGrid& other) const
{
    if (times.size() != other.times.size()) {
        return false;
    }
    const double scale = std::max(1.0, std::abs(times.back()));
    for (std::size_t j = 0; j < times.size(); ++j) {
        if (std::abs(times[j] - other.times[j]) > 1e-13 * scale) {
            return false;
        }
    }
    return true;
}

namespace
{

// Sorted, merged copy of the points in [lo, hi]; points closer than tol
// collapse onto the earlier one.
std::vector<double> merge_points(std::vector<double> pts, double lo, double hi, double tol)
{
    std::vector<double> out;
    pts.erase(std::remove_if(pts.begin(), pts.end(),
                             [&](double p) { return !(p >= lo - tol && p <= hi + tol); }),
              pts.end());
    std::sort(pts.begin(), pts.end());
    for (double p : pts) {
        p = std::clamp(p, lo, hi);
        if (out.empty() || p - out.back() > tol) {
            out.push_back(p);
        }
    }
    if (!out.empty() && hi - out.back() <= tol) {
        out.back() = hi;
    }
    return out;
}

} // namespace

TimeGrid make_time_grid(const GridSpec& spec)
{
    require(spec.T > 0.0 && std::isfinite(spec.T), ErrorCode::InvalidArgument,
            "grid horizon must be positive");
    require(spec.density >= 1, ErrorCode::InvalidArgument, "grid density must be >= 1");
    require(spec.gauss_points >= 1 && spec.gauss_points <= 16, ErrorCode::InvalidArgument,
            "gauss_points must lie in [1, 16]");
    require(spec.grading_levels >= 0 && spec.grading_levels <= 60, ErrorCode::InvalidArgument,
            "grading_levels must lie in [0, 60]");
    const double T = spec.T;
    const int cells = std::max(1, static_cast<int>(std::ceil(spec.density * T - 1e-9)));
    std::vector<double> bounds;
    for (int k = 0; k <= cells; ++k) {
        bounds.push_back(k == cells ? T : T * k / cells);
    }
    for (double b : spec.breakpoints) {
        bounds.push_back(b);
    }
    const double first = T / cells;
    for (int j = 1; j <= spec.grading_levels; ++j) {
        bounds.push_back(first * std::ldexp(1.0, -j));
    }
    bounds = merge_points(bounds, 0.0, T, 1e-12 * T);
    const GaussRule& rule = gauss_legendre(spec.gauss_points);
    TimeGrid grid;
    for (std::size_t c = 0; c + 1 < bounds.size(); ++c) {
        const double a = bounds[c];
        const double b = bounds[c + 1];
        grid.times.push_back(a);
        grid.weights.push_back(0.0);
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            grid.times.push_back(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i]);
            grid.weights.push_back(0.5 * (b - a) * rule.weights[i]);
        }
    }
    grid.times.push_back(T);
    grid.weights.push_back(0.0);
    return grid;
}

TimeGrid point_grid(std::vector<double> times)
{
    require(!times.empty(), ErrorCode::InvalidArgument, "point grid needs times");
    std::sort(times.begin(), times.end());
    require(times.front() == 0.0, ErrorCode::InvalidArgument, "point grid must start at 0");
    const double T = times.back();
    require(T > 0.0, ErrorCode::InvalidArgument, "point grid must end after 0");
    TimeGrid grid;
    grid.times = merge_points(times, 0.0, T, 1e-13 * T);
    grid.weights.assign(grid.times.size(), 0.0);
    return grid;
}

BatchData batch_of(const SourceData& data)
{
    return batch_of(std::vector<SourceData>{data});
}

BatchData batch_of(const std::vector<SourceData>& data)
{
    require(!data.empty(), ErrorCode::InvalidArgument, "batch needs at least one data set");
    const Eigen::Index m = data.front().u0.size();
    const Eigen::Index p = static_cast<Eigen::Index>(data.size());
    BatchData out;
    out.U0.resize(m, p);
    bool any = false;
    for (Eigen::Index c = 0; c < p; ++c) {
        require(data[c].u0.size() == m, ErrorCode::DimensionMismatch,
                "batch initial values differ in length");
        out.U0.col(c) = data[c].u0;
        any = any || data[c].has_forcing();
        out.breakpoints.insert(out.breakpoints.end(), data[c].breakpoints.begin(),
                               data[c].breakpoints.end());
    }
    if (any) {
        out.F = [data, m, p](double t, double) {
            Matrix F = Matrix::Zero(m, p);
            for (Eigen::Index c = 0; c < p; ++c) {
                if (data[c].has_forcing()) {
                    F.col(c) = data[c].f(t);
                }
            }
            return F;
        };
    }
    return out;
}

Trajectory Trajectory::column(int c) const
{
    require(c >= 0 && c < columns(), ErrorCode::InvalidArgument, "column index out of range");
    Trajectory out;
    out.grid = grid;
    out.tol = tol;
    out.id = id;
    out.stats = stats;
    out.values.reserve(values.size());
    out.derivs.reserve(derivs.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        out.values.emplace_back(values[j].col(c));
        out.derivs.emplace_back(derivs[j].col(c));
    }
    if (problem) {
        auto p = std::make_shared<Problem>(*problem);
        p->data.U0 = problem->data.U0.col(c);
        if (problem->data.F) {
            auto F = problem->data.F;
            p->data.F = [F, c](double t, double anchor) { return Matrix(F(t, anchor).col(c)); };
        }
        out.problem = p;
    }
    return out;
}

namespace
{

class Rhs
{
public:
    Rhs(const OperatorPath& path, const BatchData& data) : path_(path), data_(data) {}

    const Matrix& A(double t)
    {
        for (auto& slot : cache_) {
            if (slot.valid && slot.t == t) {
                return slot.A;
            }
        }
        auto& slot = cache_[next_];
        next_ = 1 - next_;
        slot.t = t;
        slot.A = path_.eval(t);
        slot.valid = true;
        return slot.A;
    }

    bool forced() const { return static_cast<bool>(data_.F); }

    Matrix F(double t, double anchor) const { return data_.F(t, anchor); }

    Matrix operator()(double t, double anchor, const Matrix& Y)
    {
        Matrix k = -(A(t) * Y);
        if (forced()) {
            k += F(t, anchor);
        }
        return k;
    }

private:
    struct Slot
    {
        double t = 0.0;
        Matrix A;
        bool valid = false;
    };
    const OperatorPath& path_;
    const BatchData& data_;
    std::array<Slot, 2> cache_;
    int next_ = 0;
};

double error_norm(const Matrix& err, const Matrix& y0, const Matrix& y1, double tol)
{
    double acc = 0.0;
    for (Eigen::Index j = 0; j < err.cols(); ++j) {
        for (Eigen::Index i = 0; i < err.rows(); ++i) {
            const double sc = tol * (1.0 + std::max(std::abs(y0(i, j)), std::abs(y1(i, j))));
            const double r = std::abs(err(i, j)) / sc;
            acc += r * r;
        }
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
}

struct Segments
{
    std::vector<double> stops;
    std::vector<int> output_index; // -1 when a stop is not an output time
};

Segments build_segments(const OperatorPath& path, const BatchData& data, const TimeGrid& grid)
{
    const double T = grid.T();
    const double tol = 1e-13 * T;
    std::vector<double> pts = grid.times;
    for (double k : path.kinks) {
        if (k > tol && k < T - tol) {
            pts.push_back(k);
        }
    }
    for (double b : data.breakpoints) {
        if (b > tol && b < T - tol) {
            pts.push_back(b);
        }
    }
    Segments seg;
    seg.stops = merge_points(pts, 0.0, T, tol);
    seg.output_index.assign(seg.stops.size(), -1);
    std::size_t j = 0;
    for (std::size_t i = 0; i < seg.stops.size() && j < grid.times.size(); ++i) {
        if (std::abs(seg.stops[i] - grid.times[j]) <= tol) {
            seg.output_index[i] = static_cast<int>(j);
            ++j;
        }
    }
    require(j == grid.times.size(), ErrorCode::GridMismatch,
            "output grid has points closer than the merge tolerance");
    return seg;
}

class Integrator
{
public:
    Integrator(const OperatorPath& path, const BatchData& data, const TimeGrid& grid,
               const SolverOptions& opt)
        : path_(path), data_(data), grid_(grid), opt_(opt), rhs_(path, data),
          seg_(build_segments(path, data, grid))
    {
    }

    Trajectory run(Method method)
    {
        Trajectory traj;
        traj.grid = grid_;
        traj.tol = opt_.tol;
        traj.id = path_.id;
        traj.stats.used = method;
        current_ = method;
        traj.values.resize(grid_.size());
        traj.derivs.resize(grid_.size());
        Matrix Y = data_.U0;
        record(traj, 0, Y);
        double h = 0.0;
        for (std::size_t i = 0; i + 1 < seg_.stops.size(); ++i) {
            const double a = seg_.stops[i];
            const double b = seg_.stops[i + 1];
            if (method == Method::Explicit) {
                dopri(a, b, Y, h, traj.stats);
            } else {
                sdirk(a, b, Y, h, traj.stats);
            }
            record(traj, i + 1, Y);
        }
        return traj;
    }

private:
    void record(Trajectory& traj, std::size_t stop, const Matrix& Y)
    {
        const int j = seg_.output_index[stop];
        if (j < 0) {
            return;
        }
        const double t = seg_.stops[stop];
        double anchor = t;
        if (stop + 1 < seg_.stops.size()) {
            anchor = 0.5 * (t + seg_.stops[stop + 1]);
        } else if (stop > 0) {
            anchor = 0.5 * (t + seg_.stops[stop - 1]);
        }
        traj.values[j] = Y;
        traj.derivs[j] = rhs_(t, anchor, Y);
    }

    // A step that only closes the current segment may be arbitrarily short.
    void check_step(double t, double h, bool closes, const SolveStats& stats) const
    {
        if (!closes && h < 1e-14 * std::max(1.0, std::abs(t))) {
            throw Error(ErrorCode::StepSizeUnderflow,
                        fmt::format("step size {:.3e} underflow at t = {}", h, t),
                        Witness{t, t, Vector()});
        }
        if (stats.steps + stats.rejected > opt_.max_steps) {
            fail(current_ == Method::Explicit ? ErrorCode::StiffnessBudgetExceeded
                                              : ErrorCode::StepSizeUnderflow,
                 fmt::format("step budget {} exhausted at t = {}", opt_.max_steps, t));
        }
    }

    double initial_step(double a, double b, double anchor, const Matrix& Y)
    {
        const Matrix k = rhs_(a, anchor, Y);
        const Matrix zero = Matrix::Zero(Y.rows(), Y.cols());
        const double d0 = error_norm(Y, zero, zero, 1.0);
        const double d1 = error_norm(k, zero, zero, 1.0);
        const double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        return std::clamp(h, 1e-12 * std::max(1.0, b), b - a);
    }

    void dopri(double a, double b, Matrix& Y, double& h, SolveStats& stats)
    {
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                                a75 = -2187.0 / 6784, a76 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        const double anchor = 0.5 * (a + b);
        double t = a;
        if (h <= 0.0) {
            h = initial_step(a, b, anchor, Y);
        }
        Matrix k1 = rhs_(t, anchor, Y);
        bool last_rejected = false;
        while (t < b) {
            double step = std::min(h, b - t);
            if (b - (t + step) < 0.01 * step) {
                step = b - t;
            }
            check_step(t, step, step == b - t && h >= step, stats);
            const Matrix k2 = rhs_(t + c2 * step, anchor, Y + step * a21 * k1);
            const Matrix k3 = rhs_(t + c3 * step, anchor, Y + step * (a31 * k1 + a32 * k2));
            const Matrix k4 =
                rhs_(t + c4 * step, anchor, Y + step * (a41 * k1 + a42 * k2 + a43 * k3));
            const Matrix k5 = rhs_(t + c5 * step, anchor,
                                   Y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            const Matrix y6 = Y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            const double t1 = (step == b - t) ? b : t + step;
            const Matrix k6 = rhs_(t1, anchor, y6);
            const Matrix y7 = Y + step * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
            const Matrix k7 = rhs_(t1, anchor, y7);
            const Matrix err =
                step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const double en = error_norm(err, Y, y7, opt_.tol);
            if (!std::isfinite(en)) {
                ++stats.rejected;
                h = 0.2 * step;
                last_rejected = true;
                continue;
            }
            if (en <= 1.0) {
                ++stats.steps;
                // Stiffness indicator h*|lambda| from the last two stages.
                const double den = (y7 - y6).norm();
                if (den > 0.0) {
                    const double hl = step * (k7 - k6).norm() / den;
                    if (hl > 3.25) {
                        ++stiff_hits_;
                        non_stiff_ = 0;
                    } else if (++non_stiff_ >= 6) {
                        stiff_hits_ = 0;
                    }
                }
                t = t1;
                Y = y7;
                k1 = k7;
                double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
                if (last_rejected) {
                    fac = std::min(fac, 1.0);
                }
                last_rejected = false;
                if (step == h || fac < 1.0) {
                    h = step * fac;
                }
                if (stiff_hits_ >= 15) {
                    const double projected =
                        static_cast<double>(stats.steps) + (grid_.T() - t) / std::max(h, 1e-300);
                    if (projected > static_cast<double>(opt_.stiffness_budget)) {
                        fail(ErrorCode::StiffnessBudgetExceeded,
                             fmt::format("explicit method is stability limited at t = {}: "
                                         "projected {:.0f} steps exceed budget {}",
                                         t, projected, opt_.stiffness_budget));
                    }
                }
            } else {
                ++stats.rejected;
                h = step * std::max(0.2, 0.9 * std::pow(en, -0.2));
                last_rejected = true;
            }
        }
    }

    // Hairer-Wanner SDIRK4, gamma = 1/4, stiffly accurate with an embedded
    // third-order solution. Stage equations are linear; they are solved with
    // one factorization of I + h gamma A(t + h/2) per step and a short fixed
    // point correction for the time dependence of A.
    void sdirk(double a, double b, Matrix& Y, double& h, SolveStats& stats)
    {
        static constexpr double g = 0.25;
        static constexpr std::array<double, 5> c{0.25, 0.75, 11.0 / 20, 0.5, 1.0};
        static constexpr double A[5][4] = {
            {0, 0, 0, 0},
            {0.5, 0, 0, 0},
            {17.0 / 50, -1.0 / 25, 0, 0},
            {371.0 / 1360, -137.0 / 2720, 15.0 / 544, 0},
            {25.0 / 24, -49.0 / 48, 125.0 / 16, -85.0 / 12},
        };
        static constexpr std::array<double, 5> bw{25.0 / 24, -49.0 / 48, 125.0 / 16, -85.0 / 12,
                                                  0.25};
        static constexpr std::array<double, 5> bh{59.0 / 48, -17.0 / 96, 225.0 / 32, -85.0 / 12,
                                                  0.0};
        const double anchor = 0.5 * (a + b);
        const Eigen::Index m = Y.rows();
        const Matrix I = Matrix::Identity(m, m);
        double t = a;
        if (h <= 0.0) {
            h = initial_step(a, b, anchor, Y);
        }
        bool last_rejected = false;
        std::array<Matrix, 5> k;
        while (t < b) {
            double step = std::min(h, b - t);
            if (b - (t + step) < 0.01 * step) {
                step = b - t;
            }
            check_step(t, step, step == b - t && h >= step, stats);
            const Matrix Am = path_.eval(t + 0.5 * step);
            Eigen::PartialPivLU<Matrix> lu(I + (step * g) * Am);
            bool converged = true;
            for (int i = 0; i < 5 && converged; ++i) {
                const double ti = t + c[i] * step;
                Matrix z = Y;
                for (int j = 0; j < i; ++j) {
                    z += (step * A[i][j]) * k[j];
                }
                const Matrix& Ai = rhs_.A(ti);
                Matrix base = -(Ai * z);
                if (rhs_.forced()) {
                    base += rhs_.F(ti, anchor);
                }
                const Matrix dA = Ai - Am;
                const bool frozen = dA.cwiseAbs().maxCoeff() <=
                                    4.0 * std::numeric_limits<double>::epsilon() *
                                        Am.cwiseAbs().maxCoeff();
                Matrix ki = lu.solve(base);
                if (!frozen) {
                    double prev = std::numeric_limits<double>::infinity();
                    converged = false;
                    for (int it = 0; it < 12; ++it) {
                        Matrix next = lu.solve(base - (step * g) * (dA * ki));
                        const double change = error_norm(step * (next - ki), Y, Y, opt_.tol);
                        ki = std::move(next);
                        if (change <= 1e-3) {
                            converged = true;
                            break;
                        }
                        if (it > 1 && change > 0.5 * prev) {
                            break;
                        }
                        prev = change;
                    }
                }
                k[i] = std::move(ki);
            }
            if (!converged) {
                ++stats.rejected;
                h = 0.25 * step;
                last_rejected = true;
                continue;
            }
            Matrix y1 = Y;
            Matrix err = Matrix::Zero(Y.rows(), Y.cols());
            for (int i = 0; i < 5; ++i) {
                y1 += (step * bw[i]) * k[i];
                err += (step * (bw[i] - bh[i])) * k[i];
            }
            err = lu.solve(err);
            const double en = error_norm(err, Y, y1, opt_.tol);
            if (en <= 1.0 && std::isfinite(en)) {
                ++stats.steps;
                t = (step == b - t) ? b : t + step;
                Y = std::move(y1);
                double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.25), 0.2, 5.0);
                if (last_rejected) {
                    fac = std::min(fac, 1.0);
                }
                last_rejected = false;
                if (step == h || fac < 1.0) {
                    h = step * fac;
                }
            } else {
                ++stats.rejected;
                h = step * (std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.25)) : 0.2);
                last_rejected = true;
            }
        }
    }

    const OperatorPath& path_;
    const BatchData& data_;
    const TimeGrid& grid_;
    const SolverOptions& opt_;
    Rhs rhs_;
    Segments seg_;
    Method current_ = Method::Explicit;
    int stiff_hits_ = 0;
    int non_stiff_ = 0;
};

double explicit_step_estimate(const OperatorPath& path, double T)
{
    double rho = 0.0;
    for (double t : {0.0, 0.5 * T, T}) {
        const Matrix A = path.eval(t);
        rho = std::max(rho, A.cwiseAbs().rowwise().sum().maxCoeff());
    }
    return rho * T / 3.3;
}

} // namespace

Trajectory solve_batch(const OperatorPath& path, const BatchData& data, const TimeGrid& grid,
                       const SolverOptions& options)
{
    require(options.tol >= 1e-13 && options.tol <= 1e-6, ErrorCode::InvalidArgument,
            fmt::format("solver tolerance {} outside [1e-13, 1e-6]", options.tol));
    require(data.U0.rows() == path.dim, ErrorCode::DimensionMismatch,
            fmt::format("initial value has {} rows, operator has dimension {}", data.U0.rows(),
                        path.dim));
    require(grid.times.size() >= 2 && grid.times.front() == 0.0, ErrorCode::InvalidArgument,
            "output grid must start at 0 and contain at least two points");
    require(std::abs(grid.T() - path.T) <= 1e-12 * path.T, ErrorCode::GridMismatch,
            fmt::format("grid ends at {}, operator horizon is {}", grid.T(), path.T));
    Method method = options.method;
    if (method == Method::Auto) {
        method = explicit_step_estimate(path, path.T) > options.stiffness_budget
                     ? Method::Implicit
                     : Method::Explicit;
    }
    Trajectory traj;
    if (method == Method::Explicit) {
        try {
            Integrator integ(path, data, grid, options);
            traj = integ.run(Method::Explicit);
        } catch (const Error& e) {
            if (options.method != Method::Auto ||
                e.code() != ErrorCode::StiffnessBudgetExceeded) {
                throw;
            }
            Integrator integ(path, data, grid, options);
            traj = integ.run(Method::Implicit);
        }
    } else {
        Integrator integ(path, data, grid, options);
        traj = integ.run(Method::Implicit);
    }
    traj.problem = std::make_shared<const Problem>(Problem{path, data, options});
    return traj;
}

Trajectory solve(const OperatorPath& path, const SourceData& data, const TimeGrid& grid,
                 const SolverOptions& options)
{
    return solve_batch(path, batch_of(data), grid, options);
}

Trajectory solve(std::function<Matrix(double)> evaluator, const SourceData& data, double T,
                 double tol, int grid_density)
{
    const int m = static_cast<int>(data.u0.size());
    const OperatorPath path = path_of(std::move(evaluator), T, m, "evaluator");
    GridSpec spec;
    spec.T = T;
    spec.density = grid_density;
    spec.breakpoints = data.breakpoints;
    SolverOptions opt;
    opt.tol = tol;
    return solve(path, data, make_time_grid(spec), opt);
}

Trajectory reference_solve(const FormFamily& form, const SourceData& data, const TimeGrid& grid,
                           double tol)
{
    SolverOptions opt;
    opt.tol = tol;
    return solve(path_of(form), data, grid, opt);
}

Trajectory resample(const Trajectory& traj, const TimeGrid& grid)
{
    require(static_cast<bool>(traj.problem), ErrorCode::GridMismatch,
            "trajectory carries no problem to resample from");
    return solve_batch(traj.problem->path, traj.problem->data, grid, traj.problem->options);
}

namespace
{

NormReport norms_of(const TimeGrid& grid, const GelfandTriple& tr,
                    const std::function<Vector(std::size_t)>& value,
                    const std::function<Vector(std::size_t)>& deriv)
{
    NormReport r;
    double l2V = 0.0;
    double l2H = 0.0;
    double d2H = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const Vector u = value(j);
        const double nV = tr.norm(u, Scale::V);
        const double nH = u.norm();
        r.c0V = std::max(r.c0V, nV);
        r.c0H = std::max(r.c0H, nH);
        const double w = grid.weights[j];
        if (w > 0.0) {
            l2V += w * nV * nV;
            l2H += w * nH * nH;
            d2H += w * deriv(j).squaredNorm();
        }
    }
    r.l2V = std::sqrt(l2V);
    r.l2H = std::sqrt(l2H);
    r.h1H = std::sqrt(l2H + d2H);
    r.mr = r.l2V + r.h1H;
    return r;
}

} // namespace

NormReport norms(const Trajectory& traj, const GelfandTriple& triple, int column)
{
    require(column >= 0 && column < traj.columns(), ErrorCode::InvalidArgument,
            "column index out of range");
    return norms_of(
        traj.grid, triple, [&](std::size_t j) { return traj.value(j, column); },
        [&](std::size_t j) { return traj.deriv(j, column); });
}

std::vector<NormReport> mr_error_columns(const Trajectory& a, const Trajectory& b,
                                         const GelfandTriple& triple)
{
    require(a.columns() == b.columns() && a.dim() == b.dim(), ErrorCode::DimensionMismatch,
            "trajectories differ in shape");
    const Trajectory* bb = &b;
    Trajectory resampled;
    if (!a.grid.same_as(b.grid)) {
        resampled = resample(b, a.grid);
        bb = &resampled;
        require(a.grid.same_as(bb->grid), ErrorCode::GridMismatch,
                "resampled grid does not match");
    }
    std::vector<NormReport> out;
    for (int c = 0; c < a.columns(); ++c) {
        out.push_back(norms_of(
            a.grid, triple,
            [&](std::size_t j) { return Vector(a.value(j, c) - bb->value(j, c)); },
            [&](std::size_t j) { return Vector(a.deriv(j, c) - bb->deriv(j, c)); }));
    }
    return out;
}

NormReport mr_error(const Trajectory& a, const Trajectory& b, const GelfandTriple& triple)
{
    require(a.columns() == 1 && b.columns() == 1, ErrorCode::InvalidArgument,
            "mr_error compares single-column trajectories");
    return mr_error_columns(a, b, triple).front();
}

} // namespace formavg
