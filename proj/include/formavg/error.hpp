// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FORMAVG_ERROR_HPP
#define FORMAVG_ERROR_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "formavg/types.hpp"

namespace formavg
{

/// Failure categories. The numeric values are part of the C API (see formavg.h).
enum class ErrorCode : int
{
    InvalidArgument = 1,
    DimensionMismatch = 2,
    DeclaredConstantViolated = 3,
    DiniViolated = 4,
    DivergentIntegral = 5,
    Unbounded = 6,
    QuadratureNotConverged = 7,
    StepSizeUnderflow = 8,
    StiffnessBudgetExceeded = 9,
    BoundViolated = 10,
    PowerIterationStalled = 11,
    GridNotConverged = 12,
    SingularResolvent = 13,
    ExponentialNotConverged = 14,
    SqrtResidualTooLarge = 15,
    GridMismatch = 16,
    ConfigError = 17,
    Io = 18,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Sample point at which a checked inequality failed.
struct Witness
{
    double t = 0.0;
    double s = 0.0;
    Vector x;
};

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& what);
    Error(ErrorCode code, const std::string& what, Witness witness);

    ErrorCode code() const noexcept { return code_; }
    const std::optional<Witness>& witness() const noexcept { return witness_; }

private:
    ErrorCode code_;
    std::optional<Witness> witness_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const std::string& what)
{
    if (!condition) {
        fail(code, what);
    }
}

} // namespace formavg

#endif // FORMAVG_ERROR_HPP
