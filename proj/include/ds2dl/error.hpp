#pragma once

#include <stdexcept>
#include <string>

namespace ds2dl {

/// Base of every error thrown by the library. The CLI maps each subclass to a
/// distinct exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied an out-of-range or inconsistent parameter.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A file does not match its binary format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure (open, read, write).
class IoError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, divergence, or an iterative method that failed to converge.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Violated precondition between internal components (shape mismatch etc).
class ContractError : public Error {
public:
    using Error::Error;
};

}  // namespace ds2dl
