// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace steepgs {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Projected 2x2 covariance whose determinant fell below the collapse threshold.
class DegenerateCovariance : public Error {
  public:
    using Error::Error;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

/// Tape or accumulator no longer matches the scene it is being applied to.
class StaleState : public Error {
  public:
    using Error::Error;
};

class InvalidArgument : public Error {
  public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
  public:
    using Error::Error;
};

/// Configuration text that does not parse or names unknown keys.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// An input path that does not exist or cannot be opened.
class FileNotFound : public Error {
  public:
    using Error::Error;
};

} // namespace steepgs
