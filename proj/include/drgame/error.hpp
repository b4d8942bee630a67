#pragma once

#include <stdexcept>
#include <string>

namespace drgame {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant (bad dimensions, infeasible
/// bounds, malformed scenario rows, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The requested quantity is mathematically undefined for this input,
/// e.g. a best response when the objective is constant.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// An iterative kernel failed to meet its own convergence guarantee.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

} // namespace drgame
