#pragma once

#include <stdexcept>
#include <string>

namespace chokimpc {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input series too short for the requested operation.
class LengthError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (timestamps, shapes, inconsistent lengths).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

/// Iterative numerical method failed to converge.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid user configuration (patient file, scenario, flags).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File parse failure; the message names the line and field.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Plant blow-up or controller failure inside a simulation.
class SimulationFault : public Error {
public:
    using Error::Error;
};

}  // namespace chokimpc
