// Copyright 2026 The formavg Authors
// SPDX-License-Identifier: Apache-2.0

#include "formavg/error.hpp"

namespace formavg
{

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DeclaredConstantViolated: return "DeclaredConstantViolated";
    case ErrorCode::DiniViolated: return "DiniViolated";
    case ErrorCode::DivergentIntegral: return "DivergentIntegral";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::StiffnessBudgetExceeded: return "StiffnessBudgetExceeded";
    case ErrorCode::BoundViolated: return "BoundViolated";
    case ErrorCode::PowerIterationStalled: return "PowerIterationStalled";
    case ErrorCode::GridNotConverged: return "GridNotConverged";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::ExponentialNotConverged: return "ExponentialNotConverged";
    case ErrorCode::SqrtResidualTooLarge: return "SqrtResidualTooLarge";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

Error::Error(ErrorCode code, const std::string& what, Witness witness)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code),
      witness_(std::move(witness))
{
}

void fail(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace formavg
