// Copyright 2026 The rpk Authors. All Rights Reserved.
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

namespace rpk {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes, wrong input sizes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf met where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class NonFiniteLoss : public NumericError {
 public:
  NonFiniteLoss(std::size_t step, double value)
      : NumericError("non-finite loss " + std::to_string(value) + " at step " +
                     std::to_string(step)),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Binary file format errors.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class BadMagic : public FormatError {
 public:
  using FormatError::FormatError;
};

class UnsupportedVersion : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedFile : public FormatError {
 public:
  using FormatError::FormatError;
};

class DuplicateId : public FormatError {
 public:
  using FormatError::FormatError;
};

// Payload decoded but violates the format's consistency rules.
class IntegrityError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace rpk
