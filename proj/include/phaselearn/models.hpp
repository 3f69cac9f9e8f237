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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phaselearn/lattice.hpp"
#include "phaselearn/lindblad.hpp"

namespace phaselearn {

/// tau value standing for the steady state.
inline constexpr double kSteadyTime = std::numeric_limits<double>::infinity();

using Hyperparams = std::map<std::string, double>;

/// Per-site reset towards cos(theta)|0> + sin(theta)|1>, theta = (pi/4)(x+1),
/// at rate kappa0. Exactly solvable at any size.
ParamLindbladian build_pinning_family(const Lattice& lattice, double kappa0,
                                      double ancilla_coupling = 0.5);

/// H(x) = sum_j x_j^h Z_j + x_j^J Z_j Z_{j+1} + g X_j with amplitude damping
/// sqrt(kappa) sigma^-_j on every site. Site and bond terms are separate
/// and interleaved in site order.
ParamLindbladian build_dissipative_tfim(const Lattice& lattice, double g, double kappa,
                                        double ancilla_coupling = 0.5);

/// Exchange coupling between every ancilla and its attachment site.
std::vector<LindbladTerm> ancilla_coupling_terms(const Lattice& lattice, double coupling);

/// Single-site pinning state |theta><theta| for coordinate value x.
CMatrix pinning_target(double x);

/// State handed to the shadow sampler: either dense or a product of
/// single-site states.
class PhaseState {
 public:
  explicit PhaseState(DensityMatrix dense);
  PhaseState(Lattice lattice, std::vector<CMatrix> sites);

  const Lattice& lattice() const { return lattice_; }
  bool is_product() const { return dense_ == std::nullopt; }
  const DensityMatrix& dense() const;
  const std::vector<CMatrix>& sites() const { return sites_; }

  CMatrix reduced(std::span<const int> keep) const;
  double expectation(const LocalObservable& op) const;
  /// Dense form; product states are expanded (site cap applies).
  DensityMatrix to_dense() const;

 private:
  Lattice lattice_;
  std::optional<DensityMatrix> dense_;
  std::vector<CMatrix> sites_;
};

/// One catalog entry instantiated on a system lattice, with every ancilla
/// option of the menu W = {none, one ancilla per edge site}.
class Model {
 public:
  Model(std::string name, Hyperparams hyper, Lattice system);

  const std::string& name() const { return name_; }
  /// Discrete label: position in the catalog.
  int label() const;
  const Hyperparams& hyper() const { return hyper_; }
  const Lattice& system_lattice() const { return system_; }

  int ancilla_menu_size() const { return static_cast<int>(families_.size()); }
  const ParamLindbladian& family(int omega = 0) const;
  int parameter_count() const { return families_.front().parameter_count(); }

  bool has_oracle(int omega = 0) const;
  /// Exact single-site states at time t (inf for the steady state).
  std::vector<CMatrix> oracle_sites(std::span<const double> x, double t) const;
  double oracle(std::span<const double> x, double t, const LocalObservable& op) const;

  /// rho* (x) omega: every site in |0>.
  DensityMatrix reference_state(int omega = 0) const;

  /// e^{tau L(x)}(rho* (x) omega); tau = inf gives the steady state.
  PhaseState generate_state(std::span<const double> x, double tau, int omega = 0,
                            const OdeOptions& opt = {}) const;

 private:
  std::string name_;
  Hyperparams hyper_;
  Lattice system_;
  std::vector<ParamLindbladian> families_;
};

const std::vector<std::string>& catalog_names();
/// Hyperparameters of a catalog entry with defaults filled in. Unknown keys
/// are rejected.
Hyperparams complete_hyperparams(const std::string& name, const Hyperparams& given);

struct PhaseSample {
  std::vector<double> x;
  double tau = kSteadyTime;
  int omega = 0;
  std::uint64_t seed = 0;
};

/// x ~ U([-1,1]^m); tau ~ U([0, t_eps]) unless t_eps is inf (steady state);
/// omega uniform over `omegas`. Sample i draws from sub-stream ("sampling", i).
std::vector<PhaseSample> sample_parameters(int m, std::int64_t count, double t_eps,
                                           std::uint64_t seed,
                                           std::span<const int> omegas = {});

}  // namespace phaselearn
