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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "phaselearn/lattice.hpp"
#include "phaselearn/models.hpp"
#include "phaselearn/rng.hpp"

namespace phaselearn {

/// One randomized single-qubit-basis measurement of the system sites.
/// outcomes[i] is '0' for eigenvalue +1 and '1' for -1.
struct ShadowSnapshot {
  std::vector<double> x;
  double tau = kSteadyTime;
  int omega = 0;
  std::string bases;
  std::string outcomes;
  std::uint64_t seed = 0;

  bool operator==(const ShadowSnapshot&) const = default;
};

/// Draws bases uniformly and samples outcomes from the exact Born
/// distribution, one site at a time conditioned on earlier outcomes.
/// Ancilla sites are traced out first.
void measure_snapshot(const PhaseState& state, Rng& rng, ShadowSnapshot& out);
ShadowSnapshot measure_snapshot(const PhaseState& state, Rng& rng);

/// Outcome sampling for fixed bases (exposed for tests).
std::string sample_outcomes(const PhaseState& state, const std::string& bases, Rng& rng);

/// Single-site eigenstate |z><z| for a basis letter and outcome character.
CMatrix basis_projector(char basis, char outcome);

/// Inverse-channel estimator (x)_{i in B} (3|z_i><z_i| - I).
CMatrix snapshot_local_matrix(const ShadowSnapshot& s, std::span<const int> region,
                              int max_sites = 8);

/// tr[O * snapshot_local_matrix(s, supp O)].
double snapshot_value(const ShadowSnapshot& s, const LocalObservable& op);

struct LocalEstimate {
  std::vector<int> region;
  CMatrix matrix;
  std::int64_t count = 0;
  std::string source;
};

/// Mean of snapshot_local_matrix over the selected snapshots, summed in
/// index order. Throws NoMatchingSamples for an empty selection.
LocalEstimate aggregate(std::span<const ShadowSnapshot> snapshots, std::span<const std::int64_t> indices,
                        std::span<const int> region);
LocalEstimate aggregate(std::span<const ShadowSnapshot> snapshots, std::span<const int> region);

/// Median over k equal batches (remainder discarded) of the batch means.
double median_of_means(std::span<const double> values, int batches);

/// ceil(8 log(2/delta')) capped at floor(count/2), at least one.
int default_batches(std::int64_t count, double delta_prime);

/// Smallest q with q >= 8 12^k0 / (3 eps^2) log(n^k0 2^(k0+1) / delta').
std::int64_t required_shadow_count(double eps, double delta_prime, int k0, int n);

/// Interchange format: header lines start with '#', then one record per line
/// "x_hex tau omega bases outcomes seed".
void write_snapshots(std::ostream& os, std::span<const ShadowSnapshot> snapshots,
                     const std::vector<std::string>& header = {});
std::vector<ShadowSnapshot> read_snapshots(std::istream& is);

std::string encode_params(std::span<const double> x);
std::vector<double> decode_params(const std::string& hex);

}  // namespace phaselearn
