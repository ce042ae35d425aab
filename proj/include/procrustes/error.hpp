#pragma once

#include <stdexcept>
#include <string>

namespace procrustes {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (k < d, mismatched clouds, ...).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A scalar argument outside its admissible range.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Rank deficiency where full rank is required.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// A decomposition whose residual exceeds its tolerance.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NotPsdError : public Error {
public:
    using Error::Error;
};

/// Requested work exceeds a memory guard.
class ResourceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration document; `line()` is 1-based, 0 when unknown.
class ConfigError : public ArgumentError {
public:
    ConfigError(const std::string& message, int line)
        : ArgumentError(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace procrustes
