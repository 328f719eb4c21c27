// Error types shared by all solver layers.
#pragma once

#include <stdexcept>
#include <string>

namespace spiral {

/// Parameter outside its mathematical domain (e.g. mu <= 1/2).
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// A documented precondition of an operation was violated by the caller.
struct PreconditionError : std::invalid_argument {
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure: non-convergent series/iteration, singular solve, step underflow.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// The solution left the validity region of the spiral coordinates (sign conditions).
struct DegenerateStateError : std::runtime_error {
    explicit DegenerateStateError(const std::string& what) : std::runtime_error(what) {}
};

/// Config/profile document violates the schema; message carries the JSON path.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// File I/O, version or corruption problems on solution files.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spiral
