#pragma once

#include <stdexcept>
#include <string>

namespace sorql {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An input value was NaN or infinite where a finite number is required.
struct NonFiniteInput : Error {
    using Error::Error;
};

/// Vector/matrix shapes do not line up.
struct DimensionMismatch : Error {
    using Error::Error;
};

/// A parameter is outside its documented domain.
struct InvalidParams : Error {
    using Error::Error;
};

/// An action index is outside the environment's action set.
struct InvalidAction : Error {
    using Error::Error;
};

/// step() was called on a state that already ended the episode.
struct SteppingTerminalState : Error {
    using Error::Error;
};

/// Enumerating a model would exceed the configured state cap.
struct StateSpaceTooLarge : Error {
    using Error::Error;
};

/// An iterative solver hit its iteration cap before reaching tolerance,
/// or an internal optimality check failed after it reported success.
struct SolverFailure : Error {
    using Error::Error;
};

/// Fixed-point iteration did not reach the requested tolerance.
struct NoConvergence : Error {
    using Error::Error;
};

/// A projection radius or other scale parameter must be positive.
struct RadiusNonPositive : Error {
    using Error::Error;
};

/// A checked analytic inequality was violated by the computed sequences.
struct InequalityViolated : Error {
    using Error::Error;
};

/// Training produced a non-finite loss or parameter.
struct NumericalDivergence : Error {
    using Error::Error;
};

/// A CSV column required by the caller is absent from the file.
struct MissingColumn : Error {
    using Error::Error;
};

/// A plot was requested for a series with no data points.
struct EmptySeries : Error {
    using Error::Error;
};

/// Refusing to overwrite an existing output file without --force.
struct FileExists : Error {
    using Error::Error;
};

}  // namespace sorql
