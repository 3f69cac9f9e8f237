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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "phaselearn/lattice.hpp"
#include "phaselearn/learner.hpp"
#include "phaselearn/models.hpp"

namespace phaselearn {

/// Parses the TOML subset used for experiment files: [table] and [a.b]
/// headers, bare keys, strings, numbers (including inf), booleans and
/// possibly multi-line arrays. Throws ConfigError with a line number.
nlohmann::json parse_toml(const std::string& text);

struct ModelSpec {
  std::string name;
  Hyperparams hyper;
  std::vector<int> omegas{0};  // ancilla menu entries used for sampling
};

struct LatticeSpec {
  std::vector<int> extent;
  Boundary boundary = Boundary::open;
  Lattice build() const { return Lattice(extent, boundary); }
};

struct ConstantsSpec {
  bool calibrate = false;
  int calibration_extent = 4;   // per-axis extent of the calibration lattice
  int calibration_points = 3;   // random parameter points probed
  std::vector<double> t_grid;   // mixing time grid (default grid when empty)
  double lr_time = 1.0;
  // Explicit values; structural constants not given here are derived from the model.
  std::optional<double> gamma_prime, mu, c_prime, J;
  std::optional<int> ell, r0;
  double kappa = 1.0;
  double f_coeff = 1.0;
  double f_power = 1.0;
};

struct TrainingSpec {
  std::optional<std::int64_t> N, q;
  std::optional<double> gamma, t_eps;
  std::optional<int> r;
  std::int64_t cap = 100000;
  int mom_batches = 0;          // 0 = automatic
  int test_points = 50;
  bool exact = true;            // compare against exact values
  std::vector<std::int64_t> sweep;
};

struct DiagnosticsSpec {
  std::string observable = "Z0";
  std::string params = "random";  // "random" or "zeros"
  double lr_time = 1.0;
  int r_max = -1;                 // -1 = lattice diameter
  std::vector<double> t_grid;
  std::vector<int> s_grid;
  std::vector<int> A, R, W;       // compatibility regions (defaults derived)
  double shift = 0.5;
  std::vector<double> stability_times{1.0, 2.0, 4.0};
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  Mode mode = Mode::steady;
  int workers = 1;
  ModelSpec model;
  LatticeSpec lattice;
  double eps = 0.1, delta = 0.1, delta_prime = 0.1;
  std::vector<std::string> observables;
  int k0 = 0;                     // 0 = largest observable support
  ConstantsSpec constants;
  TrainingSpec training;
  DiagnosticsSpec diagnostics;
  nlohmann::json source;          // parsed document, echoed into reports

  /// Observables on the system lattice.
  std::vector<LocalObservable> build_observables() const;
  /// Stable digest of every field that influences results.
  std::string digest() const;
};

/// Validates the parsed document against the schema. Unknown keys, wrong
/// types and out-of-range values raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace phaselearn
