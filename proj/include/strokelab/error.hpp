#pragma once

#include <stdexcept>
#include <string>

namespace strokelab {

/// Base class for all errors raised by the library. The CLI maps any
/// Error to exit code 1; usage problems are handled before this layer.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input documents (XML, CSV, JSONL).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

/// Structurally valid input that violates a documented invariant
/// (duplicate keys, non-positive indicators, degenerate samples, ...).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

} // namespace strokelab
