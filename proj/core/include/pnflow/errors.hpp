// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pnflow {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Point does not lie on the support of a distribution.
class SupportError : public Error {
 public:
  using Error::Error;
};

/// Point too close to the excluded north pole of the stereographic map.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Operation has no defined meaning for the given distribution.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Interpolation endpoints for which the requested path is undefined.
class DegeneratePathError : public Error {
 public:
  using Error::Error;
};

/// Shapes or dimensions disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced while evaluating a model. `layer` is the index of
/// the first layer that produced it; the chain length denotes the base term.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int layer, int epoch = -1, int batch = -1)
      : Error(what), layer_(layer), epoch_(epoch), batch_(batch) {}

  int layer() const { return layer_; }
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }

 private:
  int layer_;
  int epoch_;
  int batch_;
};

/// Malformed binary or text input.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Unparseable text value; `line` is 1-based.
class ParseError : public FormatError {
 public:
  ParseError(const std::string& what, std::size_t line) : FormatError(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Invalid user configuration or command-line request.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace pnflow
