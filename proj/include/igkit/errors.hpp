#pragma once

#include <stdexcept>
#include <string>

namespace igkit {

// Base class for all library errors. Subclasses mark the failure category so
// callers (and the command-line tool) can map them to distinct exit paths.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Violated precondition on a caller-supplied argument.
struct argument_error : error {
    using error::error;
};

// Degenerate geometry or statistics: singular metric, zero variance, rank loss.
struct degeneracy_error : error {
    using error::error;
};

// Absolute-continuity violation: q vanishes where p has mass, or a geodesic
// endpoint has a zero-mass point.
struct support_error : error {
    using error::error;
};

// Numerical quadrature failed to reach the requested tolerance.
struct integration_error : error {
    using error::error;
};

// Model is outside the form an operation supports (e.g. a joint family whose
// base measure couples the observed and hidden blocks).
struct unsupported_model_error : error {
    using error::error;
};

// Constraint set admits no distribution, detected via unbounded multipliers.
struct infeasibility_error : error {
    using error::error;
};

// An iterative solver exhausted its iteration budget without converging.
struct convergence_error : error {
    using error::error;
};

// File or stream could not be read or written.
struct io_error : error {
    using error::error;
};

} // namespace igkit
