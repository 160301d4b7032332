// Copyright 2026 The rgshield Authors
// SPDX-License-Identifier: Apache-2.0
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

namespace rgshield {

// Root of all domain errors. Precondition violations by the caller are
// reported with std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A dimension exceeds what exact enumeration can hold.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// D_KL(p1 || p2) is infinite: p1 has mass where p2 has none.
class DivergenceInfiniteError : public Error {
 public:
  using Error::Error;
};

// A distribution that must be strictly positive has a zero entry.
class PositivityError : public Error {
 public:
  using Error::Error;
};

// A finite-difference or optimizer evaluation produced NaN/inf.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The training objective became non-finite.
class TrainingDivergenceError : public Error {
 public:
  TrainingDivergenceError(int sweep, const std::string& what)
      : Error("training diverged at sweep " + std::to_string(sweep) + ": " +
              what),
        sweep_(sweep) {}
  int sweep() const noexcept { return sweep_; }

 private:
  int sweep_;
};

// The Fisher matrix is numerically zero, so there is no direction to poison.
class NoUnstableDirectionError : public Error {
 public:
  using Error::Error;
};

// A file or config does not match its schema. `path()` names the offending
// field, e.g. "layers[1].W[3]".
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class VersionError : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

// A file could not be opened for reading or writing.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rgshield
