// Copyright 2026 The Phaselearn Authors
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

namespace phaselearn {

/// Malformed or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The learner plan cannot be realised at desk scale (CLI exit code 3).
class PlanInfeasible : public std::runtime_error {
 public:
  PlanInfeasible(const std::string& what, double log2_samples)
      : std::runtime_error(what), log2_samples_(log2_samples) {}
  double log2_samples() const { return log2_samples_; }

 private:
  double log2_samples_;
};

/// Integrator breakdown, NaNs, invalid probabilities (CLI exit code 4).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonUniqueSteadyState : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Raised by aggregate() when no snapshot falls in the requested cell.
class NoMatchingSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phaselearn
