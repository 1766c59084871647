#pragma once

#include <stdexcept>
#include <string>

namespace lpnorm {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : SolverError {
    using SolverError::SolverError;
};

struct SingularSystem : SolverError {
    using SolverError::SolverError;
};

struct InfeasibleConstraint : SolverError {
    using SolverError::SolverError;
};

struct InfeasiblePoint : SolverError {
    using SolverError::SolverError;
};

// Richardson iteration exceeded its budget; the preconditioner is stale.
struct NoConvergence : SolverError {
    using SolverError::SolverError;
};

struct UnsupportedExponent : SolverError {
    using SolverError::SolverError;
};

// The MWU width-step budget was exhausted: certifies the probed zeta was
// below the true optimum of the decision problem.
struct WidthBudgetExceeded : SolverError {
    using SolverError::SolverError;
};

struct AllProbesFailed : SolverError {
    using SolverError::SolverError;
};

struct SolverContractViolation : SolverError {
    using SolverError::SolverError;
};

// IRLS weighted least-squares step came back as exactly zero.
struct DegenerateStep : SolverError {
    using SolverError::SolverError;
};

struct SingularUpdate : SolverError {
    using SolverError::SolverError;
};

struct MalformedGraph : SolverError {
    using SolverError::SolverError;
};

struct IoError : SolverError {
    using SolverError::SolverError;
};

}  // namespace lpnorm
