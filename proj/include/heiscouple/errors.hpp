// Error taxonomy for the heiscouple library.
//
// Two families, matching how callers should react:
//   * PreconditionError (std::invalid_argument) — the caller handed us input
//     that violates a documented contract.  The CLI maps these to exit code 2.
//   * SolverError (std::runtime_error) — an internal numerical procedure
//     failed to converge.  The CLI maps these (and any other runtime error)
//     to exit code 1.
#pragma once

#include <stdexcept>
#include <string>

namespace heis {

/// Caller violated a documented precondition.  CLI exit code 2.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// Two paths (or a path and an operation) use incompatible time grids.
class GridMismatchError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// A nonempty input was required.
class EmptyInputError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// A fit or estimate was asked for with too few usable data points.
class InsufficientPointsError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// An iterative numerical procedure failed to converge.  CLI exit code 1.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace heis
