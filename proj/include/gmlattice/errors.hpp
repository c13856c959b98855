#pragma once

#include <stdexcept>
#include <string>

namespace gml {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad sizes, non-positive
/// diffusion, off-grid spike, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// The model is undefined at a lattice node, i.e. the inhibitor is not
/// strictly positive there.
class DomainError : public InvalidInput {
public:
    DomainError(int node, double value);

    int node() const noexcept { return node_; }
    double value() const noexcept { return value_; }

private:
    int node_;
    double value_;
};

/// A numerical procedure did not deliver (Newton stalled, singular system,
/// eigensolver failure, empty bisection bracket, blow-up).
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// Newton iteration ran out of iterations or step halvings.
class ConvergenceFailure : public NumericalFailure {
public:
    ConvergenceFailure(const std::string& what, int iterations, double last_residual);

    int iterations() const noexcept { return iterations_; }
    double last_residual() const noexcept { return last_residual_; }

private:
    int iterations_;
    double last_residual_;
};

/// The requested pattern does not exist at these parameters.
class Nonexistence : public NumericalFailure {
public:
    Nonexistence(const std::string& what, int step);

    /// Recursion step or other locator of the failure (-1 when not applicable).
    int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace gml
