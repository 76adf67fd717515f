// Copyright 2026 The hids Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace hids {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor operands whose shapes do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (CSV, schema, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A file whose layout or version tag is not what the reader expects.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite values, divergence, or a violated numeric precondition.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hids
