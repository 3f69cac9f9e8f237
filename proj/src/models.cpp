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

#include "phaselearn/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "phaselearn/errors.hpp"
#include "phaselearn/rng.hpp"

namespace phaselearn {

namespace {

CMatrix ket_outer(double c, double s) {
  CMatrix m(2, 2);
  m << c * c, c * s, s * c, s * s;
  return m;
}

double hyper_at(const Hyperparams& h, const std::string& key) {
  auto it = h.find(key);
  if (it == h.end()) throw ConfigError("missing hyperparameter " + key);
  return it->second;
}

}  // namespace

CMatrix pinning_target(double x) {
  const double theta = std::numbers::pi / 4.0 * (x + 1.0);
  return ket_outer(std::cos(theta), std::sin(theta));
}

std::vector<LindbladTerm> ancilla_coupling_terms(const Lattice& lattice, double coupling) {
  std::vector<LindbladTerm> out;
  if (lattice.ancilla_attachments().empty()) return out;
  if (lattice.local_dim() != 2) throw std::invalid_argument("ancillas need qubit sites");
  const CMatrix lower = pauli::lowering();
  const CMatrix raise = lower.adjoint();
  const CMatrix h = coupling * (kron(raise, lower) + kron(lower, raise));
  for (std::size_t a = 0; a < lattice.ancilla_attachments().size(); ++a) {
    const int site = lattice.ancilla_attachments()[a];
    const int anc = lattice.system_sites() + static_cast<int>(a);
    out.emplace_back(std::vector<int>{site, anc}, 0,
                     [h](std::span<const double>) { return LocalGenerator{h, {}}; },
                     "exchange(" + std::to_string(site) + "," + std::to_string(anc) + ")");
  }
  return out;
}

ParamLindbladian build_pinning_family(const Lattice& lattice, double kappa0,
                                      double ancilla_coupling) {
  if (!(kappa0 > 0.0)) throw std::invalid_argument("pinning rate must be positive");
  if (lattice.local_dim() != 2) throw std::invalid_argument("pinning family needs qubits");
  std::vector<LindbladTerm> terms;
  for (int j = 0; j < lattice.system_sites(); ++j) {
    // Amplitude damping onto |theta> plus dephasing in the rotated basis
    // together form the reset channel with a single rate kappa0.
    auto builder = [kappa0](std::span<const double> p) {
      const double theta = std::numbers::pi / 4.0 * (p[0] + 1.0);
      const double c = std::cos(theta), s = std::sin(theta);
      CMatrix up(2, 1), down(2, 1);
      up << c, s;
      down << -s, c;
      LocalGenerator g;
      g.hamiltonian = CMatrix::Zero(2, 2);
      g.jumps.push_back(std::sqrt(kappa0) * up * down.adjoint());
      g.jumps.push_back(0.5 * std::sqrt(kappa0) * (up * up.adjoint() - down * down.adjoint()));
      return g;
    };
    terms.emplace_back(std::vector<int>{j}, 1, builder, "pin(" + std::to_string(j) + ")");
  }
  for (auto& t : ancilla_coupling_terms(lattice, ancilla_coupling)) terms.push_back(std::move(t));
  return ParamLindbladian(lattice, std::move(terms));
}

ParamLindbladian build_dissipative_tfim(const Lattice& lattice, double g, double kappa,
                                        double ancilla_coupling) {
  if (!(kappa > 0.0)) throw std::invalid_argument("dissipation rate must be positive");
  if (lattice.local_dim() != 2) throw std::invalid_argument("TFIM needs qubits");
  const CMatrix z = pauli::z(), xm = pauli::x();
  const CMatrix zz = kron(z, z);
  const CMatrix damp = std::sqrt(kappa) * pauli::lowering();
  std::vector<LindbladTerm> terms;
  for (int j = 0; j < lattice.system_sites(); ++j) {
    terms.emplace_back(
        std::vector<int>{j}, 1,
        [z, xm, damp, g](std::span<const double> p) {
          return LocalGenerator{p[0] * z + g * xm, {damp}};
        },
        "field(" + std::to_string(j) + ")");
    // Bonds to neighbours with larger index along each axis (with wrap).
    auto coords = lattice.coordinates(j);
    for (int axis = 0; axis < lattice.dimension(); ++axis) {
      auto next = coords;
      const int ext = lattice.extent()[static_cast<std::size_t>(axis)];
      next[static_cast<std::size_t>(axis)] += 1;
      if (next[static_cast<std::size_t>(axis)] >= ext) {
        if (lattice.boundary() == Boundary::open || ext <= 2) continue;
        next[static_cast<std::size_t>(axis)] = 0;
      }
      const int k = lattice.site_at(next);
      std::vector<int> support{std::min(j, k), std::max(j, k)};
      terms.emplace_back(
          support, 1,
          [zz](std::span<const double> p) { return LocalGenerator{p[0] * zz, {}}; },
          "bond(" + std::to_string(support[0]) + "," + std::to_string(support[1]) + ")");
    }
  }
  for (auto& t : ancilla_coupling_terms(lattice, ancilla_coupling)) terms.push_back(std::move(t));
  return ParamLindbladian(lattice, std::move(terms));
}

// ---------------------------------------------------------------------------

PhaseState::PhaseState(DensityMatrix dense) : lattice_(dense.lattice()), dense_(std::move(dense)) {}

PhaseState::PhaseState(Lattice lattice, std::vector<CMatrix> sites)
    : lattice_(std::move(lattice)), sites_(std::move(sites)) {
  if (static_cast<int>(sites_.size()) != lattice_.site_count())
    throw std::invalid_argument("product state needs one matrix per site");
}

const DensityMatrix& PhaseState::dense() const {
  if (!dense_) throw std::logic_error("product state has no dense form");
  return *dense_;
}

CMatrix PhaseState::reduced(std::span<const int> keep) const {
  if (dense_) return dense_->reduced(keep);
  CMatrix acc = CMatrix::Ones(1, 1);
  for (int s : keep) acc = kron(acc, sites_.at(static_cast<std::size_t>(s)));
  return acc;
}

double PhaseState::expectation(const LocalObservable& op) const {
  return (op.matrix * reduced(op.support)).trace().real();
}

DensityMatrix PhaseState::to_dense() const {
  if (dense_) return *dense_;
  return product_state(lattice_, sites_);
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"pinning", "dissipative_tfim"};
  return names;
}

Hyperparams complete_hyperparams(const std::string& name, const Hyperparams& given) {
  Hyperparams out;
  if (name == "pinning") {
    out = {{"kappa0", 1.0}, {"ancilla_coupling", 0.5}};
  } else if (name == "dissipative_tfim") {
    out = {{"g", 0.5}, {"kappa", 1.0}, {"ancilla_coupling", 0.5}};
  } else {
    throw ConfigError("unknown model " + name);
  }
  for (const auto& [k, v] : given) {
    if (!out.contains(k)) throw ConfigError("model " + name + " has no hyperparameter " + k);
    out[k] = v;
  }
  return out;
}

Model::Model(std::string name, Hyperparams hyper, Lattice system)
    : name_(std::move(name)),
      hyper_(complete_hyperparams(name_, hyper)),
      system_(system.without_ancillas()) {
  std::vector<int> attach = system_.edge_sites();
  if (attach.empty()) attach.push_back(0);
  for (const Lattice& lat : {system_, system_.with_ancillas(attach)}) {
    if (name_ == "pinning")
      families_.push_back(
          build_pinning_family(lat, hyper_at(hyper_, "kappa0"), hyper_at(hyper_, "ancilla_coupling")));
    else
      families_.push_back(build_dissipative_tfim(lat, hyper_at(hyper_, "g"),
                                                 hyper_at(hyper_, "kappa"),
                                                 hyper_at(hyper_, "ancilla_coupling")));
  }
}

int Model::label() const {
  const auto& names = catalog_names();
  return static_cast<int>(std::find(names.begin(), names.end(), name_) - names.begin());
}

const ParamLindbladian& Model::family(int omega) const {
  if (omega < 0 || omega >= ancilla_menu_size())
    throw std::invalid_argument("ancilla choice out of range");
  return families_[static_cast<std::size_t>(omega)];
}

bool Model::has_oracle(int omega) const { return name_ == "pinning" && omega == 0; }

std::vector<CMatrix> Model::oracle_sites(std::span<const double> x, double t) const {
  if (!has_oracle()) throw std::logic_error("model " + name_ + " has no exact oracle");
  if (static_cast<int>(x.size()) != parameter_count())
    throw std::invalid_argument("oracle: wrong parameter count");
  if (!(t >= 0.0)) throw std::invalid_argument("oracle: time must be non-negative");
  const double kappa0 = hyper_at(hyper_, "kappa0");
  const double decay = std::isinf(t) ? 0.0 : std::exp(-kappa0 * t);
  const CMatrix zero = ket_outer(1.0, 0.0);
  std::vector<CMatrix> out;
  out.reserve(x.size());
  for (double xj : x) out.push_back(decay * zero + (1.0 - decay) * pinning_target(xj));
  return out;
}

double Model::oracle(std::span<const double> x, double t, const LocalObservable& op) const {
  PhaseState s(system_, oracle_sites(x, t));
  return s.expectation(op);
}

DensityMatrix Model::reference_state(int omega) const {
  const Lattice& lat = family(omega).lattice();
  const CMatrix zero = ket_outer(1.0, 0.0);
  return product_state(lat, std::vector<CMatrix>(static_cast<std::size_t>(lat.site_count()), zero));
}

PhaseState Model::generate_state(std::span<const double> x, double tau, int omega,
                                 const OdeOptions& opt) const {
  if (!(tau >= 0.0)) throw std::invalid_argument("generate_state: tau must be non-negative");
  if (has_oracle(omega)) return PhaseState(system_, oracle_sites(x, tau));
  const auto& fam = family(omega);
  const DensityMatrix rho0 = reference_state(omega);
  if (tau == 0.0) return PhaseState(rho0);
  const Superoperator gen = assemble(fam, fam.params({x.begin(), x.end()}));
  if (std::isinf(tau)) return PhaseState(steady_state(gen, fam.lattice()));
  return PhaseState(evolve(gen, rho0, tau, opt));
}

std::vector<PhaseSample> sample_parameters(int m, std::int64_t count, double t_eps,
                                           std::uint64_t seed, std::span<const int> omegas) {
  if (count < 1) throw std::invalid_argument("sample_parameters: need at least one sample");
  if (m < 0) throw std::invalid_argument("sample_parameters: negative dimension");
  const bool steady = std::isinf(t_eps);
  if (!steady && !(t_eps > 0.0)) throw std::invalid_argument("sample_parameters: t_eps must be positive");
  const std::vector<int> menu = omegas.empty() ? std::vector<int>{0}
                                               : std::vector<int>(omegas.begin(), omegas.end());
  std::vector<PhaseSample> out(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    auto& s = out[static_cast<std::size_t>(i)];
    s.seed = derive_seed(seed, "sampling", static_cast<std::uint64_t>(i));
    Rng rng(s.seed);
    s.x.resize(static_cast<std::size_t>(m));
    for (auto& v : s.x) v = rng.uniform(-1.0, 1.0);
    s.tau = steady ? kSteadyTime : rng.uniform(0.0, t_eps);
    s.omega = menu.size() == 1 ? menu[0] : menu[rng.below(menu.size())];
  }
  return out;
}

}  // namespace phaselearn
