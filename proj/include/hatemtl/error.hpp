// Copyright 2026 The hatemtl Authors
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

#include <stdexcept>
#include <string>

namespace hatemtl {

/// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape mismatch, index out of
/// range, unknown label, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (empty corpus, empty training split, bad sizes).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures: unreadable or unwritable paths.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (dataset rows, model files, CSVs).
class LoadError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

/// A statistic is mathematically undefined for the given input
/// (zero variance, no pairable votes, too few observations).
class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

}  // namespace hatemtl
