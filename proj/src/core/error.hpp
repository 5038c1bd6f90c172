// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tadiff {

/// Tensor shapes that do not fit an operation.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Violated calling contract (e.g. backward on a non-scalar).
class ContractError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Invalid configuration values or unknown keys. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or missing data files. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace tadiff
