// Copyright 2026 The cryonoise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cryonoise {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of a physical law (negative
/// temperature, non-positive frequency, zero transmission, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Invalid or incomplete configuration (unknown keys, missing fields).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A linear system or network conversion is singular.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// Frequency requested outside the span of tabulated data.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A measurement or fit failed a physical sanity check.
class DiagnosticError : public Error {
 public:
  using Error::Error;
};

}  // namespace cryonoise
