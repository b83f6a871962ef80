/*
 *            Copyright 2026 The mlr Development Team
 *
 *      Licensed under the Apache License, Version 2.0 (the "License")
 *
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *              http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

#include <stdexcept>
#include <string>

namespace mlr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: inconsistent parameters, failed hypotheses, malformed configs.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// The energy window meets a critical value of p0 (or the shell has a
// critical point).
class CriticalValueError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// p0 never takes a value in the requested window.
class EmptyShellError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class LadderInvariantError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// Something went wrong inside a computation that was set up correctly.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double lower, double upper)
      : NumericalError(what), lower_(lower), upper_(upper) {}
  double lower() const { return lower_; }
  double upper() const { return upper_; }

 private:
  double lower_;
  double upper_;
};

}  // namespace mlr
