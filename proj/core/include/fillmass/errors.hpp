// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fillmass {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content (bad magic, truncated payload, missing key).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input using an encoding the readers do not handle.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class TooShortError : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fillmass
