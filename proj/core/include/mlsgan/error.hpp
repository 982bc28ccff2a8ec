#pragma once

#include <stdexcept>
#include <string>

namespace mlsgan {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Incompatible tensor shapes. The message names both shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Input outside the mathematical domain of an operation (e.g. log of a
/// non-positive value).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An operation produced a non-finite value from finite inputs.
/// Overflow is an error, never a silent Inf/NaN.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Training aborted (NaN gradient/loss); carries epoch/batch context.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// A file could not be parsed (truncation, bad magic, garbage token).
class ParseError : public Error {
public:
    using Error::Error;
};

/// A file parsed but violates its own header (shape or label mismatch).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Filesystem-level failure (missing file, unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (unknown key, constraint violation).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mlsgan
