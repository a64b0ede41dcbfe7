#pragma once

#include <stdexcept>
#include <string>

namespace langtrack {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A box or filter state that cannot be represented (zero/negative area, bad aspect).
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a referential or semantic rule.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Caller broke an operation's precondition (bad config, out-of-order frames...).
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace langtrack
