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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "phaselearn/config.hpp"
#include "phaselearn/diagnostics.hpp"
#include "phaselearn/learner.hpp"
#include "phaselearn/models.hpp"
#include "phaselearn/plot.hpp"
#include "phaselearn/shadows.hpp"

namespace phaselearn {

/// Plan constants with the record of how they were obtained.
struct ResolvedConstants {
  PlanConstants constants;
  nlohmann::json record;
};

/// Structural constants (J, ell, r0, D, n, M, W, k0) read off the model.
PlanConstants structural_constants(const ExperimentConfig& cfg, const Model& model);

/// Structural constants plus the rates: explicit values from the config, or
/// measured on a small lattice. gamma' is the smallest fitted mixing rate,
/// mu the smallest fitted Lieb-Robinson spatial rate (inf when every curve
/// vanishes) and c' the smallest prefactor with value <= c' |A|^kappa e^{-gamma' t}
/// on every measured point, |A| being the k0-ball volume.
ResolvedConstants resolve_constants(const ExperimentConfig& cfg);

/// Theoretical plan plus the plan actually executed (overrides and cap applied).
struct PlanBundle {
  std::string config_digest;
  std::optional<LearnerPlan> planned;
  double planned_log2_N = 0.0;
  std::string infeasible_reason;
  std::int64_t requested_N = 0;
  std::int64_t cap = 0;
  bool capped = false;
  LearnerPlan effective;  // effective.N is the number of samples used
  nlohmann::json calibration;

  nlohmann::json to_json() const;
  static PlanBundle from_json(const nlohmann::json& j);
};

/// Throws PlanInfeasible unless training overrides supply N, r, gamma (and
/// t_eps outside steady mode).
PlanBundle make_plan(const ExperimentConfig& cfg);
/// Reuses out_dir/plan.json when it was produced from the same config, else
/// plans afresh and writes it.
PlanBundle load_or_make_plan(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

std::vector<ShadowSnapshot> generate_training(const ExperimentConfig& cfg, const Model& model,
                                              const LearnerPlan& effective, std::int64_t count);

struct TestPoint {
  std::vector<double> x;
  double tau = kSteadyTime;
  int omega = 0;
};
std::vector<TestPoint> make_test_points(const ExperimentConfig& cfg, const Model& model,
                                        const LearnerPlan& effective);

struct PointResult {
  TestPoint point;
  std::vector<double> exact;      // NaN when no exact value is available
  Prediction prediction;
  double exact_sum = 0.0;
  double normalised_error = 0.0;  // |sum error| / sum ||O_i||
  std::vector<double> term_errors;  // |error_i| / ||O_i||
};

struct Evaluation {
  std::vector<PointResult> points;
  double success_fraction = 0.0;       // points with normalised error <= eps
  double term_success_fraction = 0.0;  // (point, term) pairs with error <= eps
  double median_error = 0.0;
  double mean_error = 0.0;
  double max_error = 0.0;
  std::int64_t fallbacks = 0;
  bool has_exact = false;
};

/// Exact reference values for each test point and observable.
std::vector<std::vector<double>> exact_values(const ExperimentConfig& cfg, const Model& model,
                                              const std::vector<TestPoint>& points,
                                              const std::vector<LocalObservable>& observables);

Evaluation evaluate(const ExperimentConfig& cfg, const Model& model, const LearnerPlan& effective,
                    std::span<const ShadowSnapshot> training, const std::vector<TestPoint>& points,
                    const std::vector<std::vector<double>>& exact);

void write_predictions_csv(std::ostream& os, const Evaluation& ev,
                           const std::vector<LocalObservable>& observables);

struct LearningReport {
  PlanBundle plan;
  Evaluation evaluation;
  CoverageReport coverage;
  std::vector<SweepRow> sweep;
  nlohmann::json summary;
};

/// Individual stages; each reads and writes the documented files in out_dir.
PlanBundle run_plan_stage(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
std::int64_t run_train_stage(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
LearningReport run_predict_stage(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);
std::vector<SweepRow> run_sweep_stage(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// plan, train, predict, sweep (when configured) and plots.
LearningReport run_learning_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct BatteryReport {
  std::vector<std::pair<std::string, DecayFit>> scans;
  bool all_pass = true;
  nlohmann::json to_json() const;
};

/// Runs the five assumption scans and writes diagnostics/<scan>.{csv,json,svg}
/// plus battery.json.
BatteryReport run_diagnostic_battery(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Appends "<stage> <seconds>" to out_dir/timing.txt; wall-clock data is kept
/// out of every deterministic output.
void record_timing(const std::filesystem::path& out_dir, const std::string& stage, double seconds);

}  // namespace phaselearn
