#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dbroute {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text: DDL scripts, provider responses, data files.
// line/column are 1-based; 0 means "not tied to a position".
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
        : Error(format(msg, line, column)), line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    static std::string format(const std::string& msg, std::size_t line, std::size_t column) {
        if (line == 0) return msg;
        return "line " + std::to_string(line) + ", col " + std::to_string(column) + ": " + msg;
    }
    std::size_t line_;
    std::size_t column_;
};

// Structurally valid input violating a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Failure talking to an embedding or reasoning provider.
class ProviderError : public Error {
public:
    ProviderError(const std::string& msg, bool retryable = false)
        : Error(msg), retryable_(retryable) {}
    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

// Filesystem-level failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace dbroute
