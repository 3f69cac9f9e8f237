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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "phaselearn/lattice.hpp"
#include "phaselearn/shadows.hpp"

namespace phaselearn {

enum class Mode { steady, general, slow };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

/// Model and problem constants entering the sample-complexity formulas.
struct PlanConstants {
  double gamma_prime = 1.0;  // local mixing rate
  double mu = std::numeric_limits<double>::infinity();  // Lieb-Robinson spatial rate
  double J = 1.0;            // term strength bound
  int ell = 1;               // parameters per site
  int k0 = 1;                // observable locality
  int r0 = 1;                // term radius
  int D = 1;                 // lattice dimension
  double c_prime = 1.0;      // prefactor of the local mixing envelope
  double kappa = 1.0;        // exponent of |A| in that envelope
  int n = 1;                 // system sites
  int M = 1;                 // observable terms
  int W = 1;                 // ancilla menu size
  double f_coeff = 1.0;      // slow mixing prefactor f(n) = f_coeff n^f_power
  double f_power = 1.0;

  double xi() const;
  double f_of_n() const;
  /// Sites in an l1 ball of radius k0.
  int ball_volume() const;

  nlohmann::json to_json() const;
  static PlanConstants from_json(const nlohmann::json& j);
};

struct LearnerPlan {
  double eps = 0.1;
  double delta = 0.1;
  double delta_prime = 0.1;
  Mode mode = Mode::steady;
  PlanConstants constants;

  int r = 0;
  double gamma = 0.0;
  std::int64_t q = 0;
  double t_eps = std::numeric_limits<double>::infinity();
  int m_r = 0;
  double log2_N = 0.0;
  std::int64_t N = 0;

  nlohmann::json to_json() const;
  static LearnerPlan from_json(const nlohmann::json& j);
};

/// Derives r, gamma, q, t_eps and N. Throws PlanInfeasible when N would
/// reach 2^63 or the time horizon is not positive.
LearnerPlan plan(double eps, double delta, double delta_prime, const PlanConstants& c, Mode mode);

struct PatchMatch {
  std::int64_t index = -1;
  double distance = std::numeric_limits<double>::infinity();
};

/// l-infinity distance between x and a snapshot tag over `coords`, joined
/// with |t - tau| when use_time is set.
double patch_distance(std::span<const double> x, double t, const ShadowSnapshot& s,
                      std::span<const int> coords, bool use_time);

/// Closest sample with the same ancilla choice; lowest index wins ties.
PatchMatch nearest_patch(std::span<const double> x, double t, int omega,
                         std::span<const ShadowSnapshot> training, std::span<const int> coords,
                         bool use_time);

/// All samples with the same ancilla choice within distance gamma.
std::vector<std::int64_t> select_cell(std::span<const double> x, double t, int omega,
                                      std::span<const ShadowSnapshot> training,
                                      std::span<const int> coords, double gamma, bool use_time);

struct PredictOptions {
  /// Median-of-means batches; 0 picks default_batches(count, delta').
  int mom_batches = 0;
  int workers = 1;
};

struct Prediction {
  double value = 0.0;
  std::vector<double> per_term;
  std::vector<std::int64_t> counts;
  std::vector<double> patch_distances;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// Nearest-patch estimate of sum_i tr[O_i rho(x, t)].
Prediction predict(const std::vector<LocalObservable>& observables, std::span<const double> x,
                   double t, int omega, std::span<const ShadowSnapshot> training,
                   const LearnerPlan& plan, const Lattice& lattice, const ParamLayout& layout,
                   const PredictOptions& opt = {});

/// Coordinates the prediction of `op` depends on: terms touching supp(O)(r).
std::vector<int> patch_coordinates(const LocalObservable& op, int r, const Lattice& lattice,
                                   const ParamLayout& layout);

struct CoverageRegion {
  std::vector<int> coordinates;
  int dims = 0;                   // restricted dimension (plus time in general mode)
  double cells = 0.0;             // total gamma-cells
  std::int64_t cells_examined = 0;
  double covered_any = 0.0;       // fraction with at least one sample
  double covered_q = 0.0;         // fraction with at least q samples
  double failure_bound = 0.0;     // M exp(-N (gamma/2)^m + m log(2/gamma))
  double failure_bound_q = 0.0;   // q-copies version
};

struct CoverageReport {
  std::int64_t N = 0;
  double gamma = 0.0;
  std::int64_t q = 0;
  std::vector<CoverageRegion> regions;
  double worst_failure_bound = 0.0;
  double worst_failure_bound_q = 0.0;
  double min_covered_any = 1.0;
  double min_covered_q = 1.0;

  nlohmann::json to_json() const;
};

/// Occupancy of the gamma-grid over each region's coordinates. Grids with
/// more than 1e6 cells are subsampled (seeded).
CoverageReport coverage_report(std::span<const ShadowSnapshot> training, double gamma, std::int64_t q,
                               const std::vector<std::vector<int>>& regions, bool use_time,
                               double t_eps, int M, std::uint64_t seed);

double coverage_failure_bound(std::int64_t N, double gamma, int dims, int M);
double coverage_failure_bound_q(std::int64_t N, double gamma, int dims, int M, std::int64_t q);

}  // namespace phaselearn
