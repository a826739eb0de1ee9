// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DYNFILT_ERRORS_H_
#define DYNFILT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dynfilt {

// Root of every error thrown by the library. Each subclass names the
// category of contract that was violated.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents disagree with what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Kernel/stride/padding geometry cannot be applied to the input extent.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// A forward or backward pass produced NaN or Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller broke an API precondition (e.g. backward on a non-scalar).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Audio or feature files could not be read.
class IngestionError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class MixError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace dynfilt

#endif  // DYNFILT_ERRORS_H_
