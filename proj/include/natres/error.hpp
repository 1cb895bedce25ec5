// Copyright 2026 The natres Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace natres {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument, spec, or configuration value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed input file; the message carries the row/column location.
class DataError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity produced during training. step is the 0-based optimizer
// step, or -1 when the failure happened outside a training loop.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::int64_t step = -1)
      : Error(what), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace natres
