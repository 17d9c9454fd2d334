// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the hdrforge project.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hdrforge {

enum class ErrorKind {
    invalid_argument,
    insufficient_data,
    numerical_failure,
    parse_error,
    unsupported_format,
    validation,
    io,
};

inline const char *to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::unsupported_format: return "unsupported-format";
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto its exit-code contract.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

/// Parse failure with the byte offset where decoding stopped.
class ParseError : public Error {
  public:
    ParseError(const std::string &what, std::size_t offset)
        : Error(ErrorKind::parse_error, what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

  private:
    std::size_t offset_;
};

/// Numerical failure that occurred at a known iteration.
class StepFailure : public Error {
  public:
    StepFailure(const std::string &what, int step)
        : Error(ErrorKind::numerical_failure, what + " at step " + std::to_string(step)),
          step_(step) {}

    int step() const noexcept { return step_; }

  private:
    int step_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string &what) {
    if (!condition)
        fail(kind, what);
}

} // namespace hdrforge
