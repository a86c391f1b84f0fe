#pragma once

#include <stdexcept>
#include <string>

namespace bohm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
    /// Short machine-readable tag, emitted by the CLI in its error JSON.
    virtual const char* kind() const noexcept { return "error"; }
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "domain"; }
};

/// Invalid model or run configuration.
class ParameterError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "parameter"; }
};

/// Iterative method (quadrature, root finder) failed to reach its tolerance.
class ConvergenceError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "convergence"; }
};

/// Requested an arrival-time moment that is infinite.
class DivergentMomentError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "divergent_moment"; }
};

/// Velocity field evaluated at the node z = 0 (or below the guard).
class SingularInputError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "singular_input"; }
};

/// Trajectory integration failed: step underflow or no crossing before the cap.
class IntegrationError : public Error {
  public:
    using Error::Error;
    const char* kind() const noexcept override { return "integration"; }
};

}  // namespace bohm
