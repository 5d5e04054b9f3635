#pragma once

#include <stdexcept>
#include <string>

namespace beltgap {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter is outside its admissible range (maps to CLI exit code 2).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Transport speed at or above the critical speed v = 1.
class SupercriticalSpeed : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

/// A closed-form expression is evaluated outside its domain.
class DomainError : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

/// Eigen-solver failure, instability or other numerical breakdown (exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Implicit differentiation or null-space extraction hit a degenerate point.
class DegenerateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) {
        throw InvalidParameter(what);
    }
}

}  // namespace detail

}  // namespace beltgap
