// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace colora {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor or kernel shapes.
struct ShapeError : Error {
  using Error::Error;
};

/// Invalid values (non-finite input, out-of-range label, bad argument).
struct ValueError : Error {
  using Error::Error;
};

/// Numeric failure during optimization (NaN loss or gradient).
struct NumericError : Error {
  using Error::Error;
};

/// File read/write failure or malformed on-disk data.
struct IoError : Error {
  using Error::Error;
};

}  // namespace colora
