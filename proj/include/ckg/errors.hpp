#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ckg {

/// Malformed input text; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Model file problems: bad magic/version, truncated payload, header/payload disagreement.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input matrix violates a spectral precondition (non-square, non-normal, rank too high).
class SpectralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace ckg
