//
// Project EquiHG - Copyright 2026 The EquiHG Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace equihg {

/// Base class for user-facing failures (bad input, bad data, bad config).
/// The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure in a molecular file format, carrying the 1-based line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) { }

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// SMILES failures point at a character offset instead of a line.
class SmilesError : public Error {
 public:
  SmilesError(std::size_t pos, const std::string &what)
      : Error("SMILES position " + std::to_string(pos) + ": " + what),
        pos_(pos) { }

  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raised when a non-finite value shows up in a loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Internal invariant violation (a bug, not a user error). Exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace equihg
