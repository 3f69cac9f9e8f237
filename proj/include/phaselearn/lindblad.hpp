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
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "phaselearn/lattice.hpp"
#include "phaselearn/linalg.hpp"
#include "phaselearn/ode.hpp"

namespace phaselearn {

/// Hamiltonian and jump operators of one term, as matrices on its support.
struct LocalGenerator {
  CMatrix hamiltonian;
  std::vector<CMatrix> jumps;
};

/// Upper bound on the cb 1->1 norm of a generator: 2|h| + 2 sum |L_k|^2.
double generator_strength(const LocalGenerator& g);

/// Dense d^{2k} superoperator of a local generator (column-stacking vec).
CMatrix local_superoperator(const LocalGenerator& g);

/// One geometrically local term L_j(x_j). The builder maps the term's own
/// parameters (each in [-1, 1]) to its generator.
class LindbladTerm {
 public:
  using Builder = std::function<LocalGenerator(std::span<const double>)>;

  LindbladTerm(std::vector<int> support, int param_count, Builder builder, std::string name);

  const std::vector<int>& support() const { return support_; }
  int param_count() const { return param_count_; }
  const std::string& name() const { return name_; }
  LocalGenerator generator(std::span<const double> params) const;

  /// Strength bound maximised over the corners and centre of the box.
  double strength() const { return strength_; }

 private:
  std::vector<int> support_;
  int param_count_;
  Builder builder_;
  std::string name_;
  double strength_ = 0.0;
};

/// L(x) = sum_j L_j(x_j) on a lattice (possibly carrying ancilla sites).
class ParamLindbladian {
 public:
  ParamLindbladian(Lattice lattice, std::vector<LindbladTerm> terms);

  const Lattice& lattice() const { return lattice_; }
  const std::vector<LindbladTerm>& terms() const { return terms_; }
  const std::shared_ptr<const ParamLayout>& layout() const { return layout_; }
  int parameter_count() const { return layout_->parameter_count(); }

  ParamVector params(std::vector<double> values) const;
  ParamVector zero_params() const;

  /// Largest certified term strength J.
  double strength() const { return strength_; }
  /// Smallest r0 such that every term support fits in a ball of radius r0.
  int term_radius() const { return term_radius_; }
  /// ceil(m / system sites): parameters per site.
  int params_per_site() const;
  /// Largest number of terms touching one site.
  int max_overlap() const;

  /// Builds the local generators of all terms at x.
  std::vector<LocalGenerator> generators(const ParamVector& x) const;

 private:
  Lattice lattice_;
  std::vector<LindbladTerm> terms_;
  std::shared_ptr<const ParamLayout> layout_;
  double strength_ = 0.0;
  int term_radius_ = 0;
};

/// Dense state on the lattice Hilbert space.
class DensityMatrix {
 public:
  /// Checks Hermiticity and unit trace; positivity is checked for small spaces.
  DensityMatrix(Lattice lattice, CMatrix data);
  static DensityMatrix unchecked(Lattice lattice, CMatrix data);

  const Lattice& lattice() const { return lattice_; }
  const CMatrix& data() const { return data_; }

  /// Full check including the minimal eigenvalue.
  void validate(double herm_tol = 1e-10, double trace_tol = 1e-10, double psd_tol = 1e-8) const;

  double expectation(const LocalObservable& op) const;
  /// Reduced state on `keep` (sorted), in the Kronecker order of `keep`.
  CMatrix reduced(std::span<const int> keep) const;

 private:
  DensityMatrix(Lattice lattice, CMatrix data, bool check);
  Lattice lattice_;
  CMatrix data_;
};

CMatrix partial_trace(const CMatrix& rho, const Lattice& lattice, std::span<const int> keep);

/// Tensor product of single-site states, site 0 leftmost.
DensityMatrix product_state(const Lattice& lattice, const std::vector<CMatrix>& site_states);

enum class Picture { schrodinger, heisenberg };

struct Superoperator {
  SparseCMatrix matrix;
  Picture picture = Picture::schrodinger;
  std::int64_t hilbert_dim = 0;

  Superoperator adjoint() const;
  CMatrix apply(const CMatrix& op) const;
  /// max_j |sum_i L_{(i,i),j}|: deviation from trace preservation.
  double trace_residual() const;
  /// One "row col re im" line per stored entry.
  void export_coo(std::ostream& os) const;
};

/// Generator of sum_j of the given local generators placed on `supports`.
Superoperator assemble_local(const Lattice& lattice, const std::vector<std::vector<int>>& supports,
                             const std::vector<LocalGenerator>& generators);
Superoperator assemble(const ParamLindbladian& family, const ParamVector& x);

CVector vectorize(const CMatrix& m);
CMatrix unvectorize(const CVector& v, std::int64_t dim);

struct EvolveStats {
  OdeStats ode;
  double trace_drift = 0.0;
};

/// e^{tL}(rho0) for a Schrödinger-picture generator.
CMatrix evolve(const Superoperator& L, const CMatrix& rho0, double t, const OdeOptions& opt = {},
               EvolveStats* stats = nullptr);
DensityMatrix evolve(const Superoperator& L, const DensityMatrix& rho0, double t,
                     const OdeOptions& opt = {}, EvolveStats* stats = nullptr);

/// e^{tL*}(O). Accepts either picture; a Schrödinger generator is adjointed.
CMatrix heisenberg_evolve(const Superoperator& L, const CMatrix& op, double t,
                          const OdeOptions& opt = {});

/// Unique steady state. Throws NonUniqueSteadyState when two different
/// initial states relax to different fixed points.
DensityMatrix steady_state(const Superoperator& L, const Lattice& lattice);
/// Kernel of the dense generator (at most 4096 x 4096).
DensityMatrix steady_state_dense(const Superoperator& L, const Lattice& lattice);

/// Hybrid parameter vector: coordinates of terms with support inside `region`
/// take their value from x, the rest from x_prime.
ParamVector localize(const ParamLindbladian& family, const ParamVector& x,
                     const ParamVector& x_prime, const Region& region);

/// Whether each term's support lies inside `region`.
std::vector<bool> terms_inside(const ParamLindbladian& family, const Region& region);

}  // namespace phaselearn
