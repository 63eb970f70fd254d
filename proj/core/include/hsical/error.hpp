#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsical {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed binary file. `offset` is the byte position where decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Malformed text input. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Precondition violation: mismatched geometry, bad parameter, wrong color space.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Too many unusable denominators while white balancing.
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Sweep video did not cover enough of the field of view.
class CoverageError : public Error {
public:
    CoverageError(const std::string& what, double coverage) : Error(what), coverage_(coverage) {}
    double coverage() const noexcept { return coverage_; }

private:
    double coverage_;
};

class DetectionError : public Error {
public:
    using Error::Error;
};

/// Input carries no usable contrast (e.g. a constant sequence given to Otsu).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

}  // namespace hsical
