#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qptycho {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidDimension : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t got)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised by a PIE sweep when the running estimate collapsed to zero.
class DegenerateEstimate : public Error {
public:
    using Error::Error;
};

/// Text-format failure; carries the 1-based line of the offending input.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace qptycho
