#pragma once

#include <stdexcept>
#include <string>

namespace dmp {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed arguments: shape mismatches, non-finite input, bad ranges.
struct InvalidInputError : Error {
  explicit InvalidInputError(const std::string& msg) : Error(msg) {}
};

/// A numerical operation left its mathematical domain (e.g. log of a
/// non-positive eigenvalue).
struct NumericalDomainError : Error {
  explicit NumericalDomainError(const std::string& msg) : Error(msg) {}
};

/// Statistics requested from too few samples.
struct InsufficientSamplesError : Error {
  explicit InsufficientSamplesError(const std::string& msg) : Error(msg) {}
};

/// Malformed file content; message carries line/offset context.
struct ParseError : Error {
  explicit ParseError(const std::string& msg) : Error(msg) {}
};

}  // namespace dmp
