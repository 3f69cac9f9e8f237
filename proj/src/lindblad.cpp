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

#include "phaselearn/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>
#include <Eigen/IterativeLinearSolvers>

#include "phaselearn/errors.hpp"
#include "phaselearn/rng.hpp"

namespace phaselearn {

namespace {

// Calls fn(point) for every corner of [-1,1]^count and for the centre.
template <typename Fn>
void for_each_probe_point(int count, Fn&& fn) {
  if (count > 16) throw std::invalid_argument("too many parameters in one term");
  std::vector<double> p(static_cast<std::size_t>(count), 0.0);
  fn(std::span<const double>(p));
  if (count == 0) return;
  for (std::uint32_t mask = 0; mask < (1u << count); ++mask) {
    for (int i = 0; i < count; ++i) p[static_cast<std::size_t>(i)] = (mask >> i) & 1u ? 1.0 : -1.0;
    fn(std::span<const double>(p));
  }
}

CMatrix jump_sum(const LocalGenerator& g, Eigen::Index dim) {
  CMatrix k = CMatrix::Zero(dim, dim);
  for (const auto& l : g.jumps) k += l.adjoint() * l;
  return k;
}

void check_generator_shape(const LocalGenerator& g, Eigen::Index dim, const std::string& name) {
  if (g.hamiltonian.rows() != dim || g.hamiltonian.cols() != dim)
    throw std::invalid_argument("term " + name + ": Hamiltonian has the wrong size");
  if (!is_hermitian(g.hamiltonian, 1e-12))
    throw std::invalid_argument("term " + name + ": Hamiltonian is not Hermitian");
  for (const auto& l : g.jumps)
    if (l.rows() != dim || l.cols() != dim)
      throw std::invalid_argument("term " + name + ": jump operator has the wrong size");
}

}  // namespace

double generator_strength(const LocalGenerator& g) {
  double s = 2.0 * operator_norm(g.hamiltonian);
  for (const auto& l : g.jumps) {
    const double n = operator_norm(l);
    s += 2.0 * n * n;
  }
  return s;
}

CMatrix local_superoperator(const LocalGenerator& g) {
  const auto d = g.hamiltonian.rows();
  const CMatrix id = CMatrix::Identity(d, d);
  const CMatrix gen = cd(0, -1) * g.hamiltonian - 0.5 * jump_sum(g, d);
  CMatrix s = kron(id, gen) + kron(gen.conjugate(), id);
  for (const auto& l : g.jumps) s += kron(l.conjugate(), l);
  return s;
}

LindbladTerm::LindbladTerm(std::vector<int> support, int param_count, Builder builder,
                           std::string name)
    : support_(std::move(support)),
      param_count_(param_count),
      builder_(std::move(builder)),
      name_(std::move(name)) {
  if (support_.empty()) throw std::invalid_argument("term " + name_ + " has empty support");
  if (!std::is_sorted(support_.begin(), support_.end()) ||
      std::adjacent_find(support_.begin(), support_.end()) != support_.end())
    throw std::invalid_argument("term " + name_ + ": support must be sorted and unique");
  if (param_count_ < 0) throw std::invalid_argument("negative parameter count");
  if (!builder_) throw std::invalid_argument("term " + name_ + " has no builder");
  for_each_probe_point(param_count_, [&](std::span<const double> p) {
    strength_ = std::max(strength_, generator_strength(builder_(p)));
  });
}

LocalGenerator LindbladTerm::generator(std::span<const double> params) const {
  if (static_cast<int>(params.size()) != param_count_)
    throw std::invalid_argument("term " + name_ + ": wrong parameter count");
  return builder_(params);
}

ParamLindbladian::ParamLindbladian(Lattice lattice, std::vector<LindbladTerm> terms)
    : lattice_(std::move(lattice)), terms_(std::move(terms)) {
  std::vector<std::vector<int>> supports;
  std::vector<int> counts;
  const int d = lattice_.local_dim();
  for (const auto& t : terms_) {
    for (int s : t.support())
      if (s < 0 || s >= lattice_.site_count())
        throw std::invalid_argument("term " + t.name() + " acts outside the lattice");
    supports.push_back(t.support());
    counts.push_back(t.param_count());
    strength_ = std::max(strength_, t.strength());

    const auto dim = static_cast<Eigen::Index>(ipow(d, static_cast<int>(t.support().size())));
    for_each_probe_point(t.param_count(), [&](std::span<const double> p) {
      const auto g = t.generator(p);
      check_generator_shape(g, dim, t.name());
      const CMatrix id = CMatrix::Identity(dim, dim);
      const CVector heis = local_superoperator(g).adjoint() * vectorize(id);
      if (heis.cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("term " + t.name() + " is not unital in the Heisenberg picture");
    });

    int best = lattice_.diameter() + 1;
    for (int u = 0; u < lattice_.site_count(); ++u) {
      int far = 0;
      for (int s : t.support()) far = std::max(far, lattice_.distance(u, s));
      best = std::min(best, far);
    }
    term_radius_ = std::max(term_radius_, best);
  }
  layout_ = ParamLayout::build(std::move(supports), std::move(counts));
}

ParamVector ParamLindbladian::params(std::vector<double> values) const {
  return ParamVector(layout_, std::move(values));
}

ParamVector ParamLindbladian::zero_params() const {
  return ParamVector(layout_, std::vector<double>(static_cast<std::size_t>(parameter_count()), 0.0));
}

int ParamLindbladian::params_per_site() const {
  const int n = lattice_.system_sites();
  return std::max(1, (parameter_count() + n - 1) / n);
}

int ParamLindbladian::max_overlap() const {
  std::vector<int> count(static_cast<std::size_t>(lattice_.site_count()), 0);
  for (const auto& t : terms_)
    for (int s : t.support()) ++count[static_cast<std::size_t>(s)];
  return count.empty() ? 0 : *std::max_element(count.begin(), count.end());
}

std::vector<LocalGenerator> ParamLindbladian::generators(const ParamVector& x) const {
  if (x.layout().get() != layout_.get() && x.size() != static_cast<std::size_t>(parameter_count()))
    throw std::invalid_argument("parameter vector does not belong to this family");
  std::vector<LocalGenerator> out;
  out.reserve(terms_.size());
  for (std::size_t j = 0; j < terms_.size(); ++j)
    out.push_back(terms_[j].generator(x.term_params(static_cast<int>(j))));
  return out;
}

// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(Lattice lattice, CMatrix data, bool check)
    : lattice_(std::move(lattice)), data_(std::move(data)) {
  const auto dim = lattice_.hilbert_dim();
  if (data_.rows() != dim || data_.cols() != dim)
    throw std::invalid_argument("density matrix size does not match the lattice");
  if (check) validate(1e-10, 1e-10, 1e-8);
}

DensityMatrix::DensityMatrix(Lattice lattice, CMatrix data)
    : DensityMatrix(std::move(lattice), std::move(data), true) {}

DensityMatrix DensityMatrix::unchecked(Lattice lattice, CMatrix data) {
  return DensityMatrix(std::move(lattice), std::move(data), false);
}

void DensityMatrix::validate(double herm_tol, double trace_tol, double psd_tol) const {
  if (!data_.allFinite()) throw NumericalError("density matrix has non-finite entries");
  if (!is_hermitian(data_, herm_tol)) throw NumericalError("density matrix is not Hermitian");
  if (std::abs(data_.trace() - cd(1.0)) > trace_tol)
    throw NumericalError("density matrix trace differs from one");
  if (data_.rows() <= 256) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(data_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -psd_tol)
      throw NumericalError("density matrix has a negative eigenvalue");
  }
}

double DensityMatrix::expectation(const LocalObservable& op) const {
  const CMatrix r = reduced(op.support);
  return (op.matrix * r).trace().real();
}

CMatrix DensityMatrix::reduced(std::span<const int> keep) const {
  return partial_trace(data_, lattice_, keep);
}

CMatrix partial_trace(const CMatrix& rho, const Lattice& lattice, std::span<const int> keep) {
  const int n = lattice.site_count();
  const int d = lattice.local_dim();
  if (!std::is_sorted(keep.begin(), keep.end()))
    throw std::invalid_argument("partial_trace expects sorted sites");
  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (int s : keep) {
    if (s < 0 || s >= n) throw std::invalid_argument("partial_trace: site out of range");
    kept[static_cast<std::size_t>(s)] = true;
  }
  std::vector<std::int64_t> keep_strides, trace_strides;
  for (int s = 0; s < n; ++s) {
    const std::int64_t stride = ipow(d, n - 1 - s);
    (kept[static_cast<std::size_t>(s)] ? keep_strides : trace_strides).push_back(stride);
  }
  auto offsets = [d](const std::vector<std::int64_t>& strides) {
    const std::int64_t count = ipow(d, static_cast<int>(strides.size()));
    std::vector<std::int64_t> off(static_cast<std::size_t>(count), 0);
    for (std::int64_t idx = 0; idx < count; ++idx) {
      std::int64_t rem = idx, o = 0;
      for (std::size_t k = strides.size(); k-- > 0;) {
        o += (rem % d) * strides[k];
        rem /= d;
      }
      off[static_cast<std::size_t>(idx)] = o;
    }
    return off;
  };
  const auto ko = offsets(keep_strides);
  const auto to = offsets(trace_strides);
  const auto dk = static_cast<Eigen::Index>(ko.size());
  CMatrix out = CMatrix::Zero(dk, dk);
  for (Eigen::Index b = 0; b < dk; ++b)
    for (Eigen::Index a = 0; a < dk; ++a) {
      cd acc = 0.0;
      for (std::int64_t c : to) acc += rho(ko[static_cast<std::size_t>(a)] + c, ko[static_cast<std::size_t>(b)] + c);
      out(a, b) = acc;
    }
  return out;
}

DensityMatrix product_state(const Lattice& lattice, const std::vector<CMatrix>& site_states) {
  if (static_cast<int>(site_states.size()) != lattice.site_count())
    throw std::invalid_argument("product_state needs one state per site");
  if (lattice.site_count() > kDenseSiteCap)
    throw std::invalid_argument("product_state exceeds the dense site cap");
  CMatrix acc = CMatrix::Ones(1, 1);
  for (const auto& s : site_states) acc = kron(acc, s);
  return DensityMatrix(lattice, std::move(acc));
}

// ---------------------------------------------------------------------------

Superoperator Superoperator::adjoint() const {
  Superoperator out;
  out.matrix = SparseCMatrix(matrix.adjoint());
  out.matrix.makeCompressed();
  out.picture = picture == Picture::schrodinger ? Picture::heisenberg : Picture::schrodinger;
  out.hilbert_dim = hilbert_dim;
  return out;
}

CVector vectorize(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

CMatrix unvectorize(const CVector& v, std::int64_t dim) {
  return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

CMatrix Superoperator::apply(const CMatrix& op) const {
  if (op.rows() != hilbert_dim || op.cols() != hilbert_dim)
    throw std::invalid_argument("operator size does not match the superoperator");
  CVector v = matrix * vectorize(op);
  return unvectorize(v, hilbert_dim);
}

double Superoperator::trace_residual() const {
  if (picture == Picture::heisenberg) return adjoint().trace_residual();
  const std::int64_t step = hilbert_dim + 1;
  double worst = 0.0;
  for (std::int64_t col = 0; col < matrix.outerSize(); ++col) {
    cd acc = 0.0;
    for (SparseCMatrix::InnerIterator it(matrix, col); it; ++it)
      if (it.row() % step == 0) acc += it.value();
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

void Superoperator::export_coo(std::ostream& os) const {
  char buf[128];
  for (std::int64_t col = 0; col < matrix.outerSize(); ++col)
    for (SparseCMatrix::InnerIterator it(matrix, col); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g %.17g\n", static_cast<long long>(it.row()),
                    static_cast<long long>(it.col()), it.value().real(), it.value().imag());
      os << buf;
    }
}

Superoperator assemble_local(const Lattice& lattice, const std::vector<std::vector<int>>& supports,
                             const std::vector<LocalGenerator>& generators) {
  if (supports.size() != generators.size())
    throw std::invalid_argument("assemble_local: supports and generators differ in length");
  if (lattice.site_count() > kDenseSiteCap)
    throw std::invalid_argument("assemble: lattice exceeds the dense site cap");
  const std::int64_t dim = lattice.hilbert_dim();

  // G = -iH - K/2 collects every term acting from one side.
  SparseCMatrix g(dim, dim);
  std::vector<SparseCMatrix> jumps;
  for (std::size_t j = 0; j < generators.size(); ++j) {
    const auto& gen = generators[j];
    const auto ld = gen.hamiltonian.rows();
    const CMatrix local = cd(0, -1) * gen.hamiltonian - 0.5 * jump_sum(gen, ld);
    g += embed_sparse(local, supports[j], lattice);
    for (const auto& l : gen.jumps) jumps.push_back(embed_sparse(l, supports[j], lattice));
  }
  g.prune(cd(0.0), 0.0);

  std::vector<Triplet> trip;
  std::size_t reserve = static_cast<std::size_t>(2 * g.nonZeros() * dim);
  for (const auto& l : jumps) reserve += static_cast<std::size_t>(l.nonZeros() * l.nonZeros());
  trip.reserve(reserve);
  for (std::int64_t col = 0; col < dim; ++col)
    for (SparseCMatrix::InnerIterator it(g, col); it; ++it) {
      const std::int64_t i = it.row(), jj = it.col();
      const cd v = it.value();
      for (std::int64_t b = 0; b < dim; ++b) trip.emplace_back(b * dim + i, b * dim + jj, v);
      const cd vc = std::conj(v);
      for (std::int64_t a = 0; a < dim; ++a) trip.emplace_back(i * dim + a, jj * dim + a, vc);
    }
  for (const auto& l : jumps)
    for (std::int64_t c1 = 0; c1 < dim; ++c1)
      for (SparseCMatrix::InnerIterator it1(l, c1); it1; ++it1) {
        const cd v1 = std::conj(it1.value());
        for (std::int64_t c2 = 0; c2 < dim; ++c2)
          for (SparseCMatrix::InnerIterator it2(l, c2); it2; ++it2)
            trip.emplace_back(it1.row() * dim + it2.row(), c1 * dim + c2, v1 * it2.value());
      }

  Superoperator out;
  out.matrix.resize(dim * dim, dim * dim);
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  out.matrix.prune(cd(0.0), 0.0);
  out.matrix.makeCompressed();
  out.picture = Picture::schrodinger;
  out.hilbert_dim = dim;
  return out;
}

Superoperator assemble(const ParamLindbladian& family, const ParamVector& x) {
  std::vector<std::vector<int>> supports;
  for (const auto& t : family.terms()) supports.push_back(t.support());
  return assemble_local(family.lattice(), supports, family.generators(x));
}

// ---------------------------------------------------------------------------

CMatrix evolve(const Superoperator& L, const CMatrix& rho0, double t, const OdeOptions& opt,
               EvolveStats* stats) {
  if (!(t >= 0.0)) throw std::invalid_argument("evolve: time must be non-negative");
  if (rho0.rows() != L.hilbert_dim || rho0.cols() != L.hilbert_dim)
    throw std::invalid_argument("evolve: state size does not match the generator");
  if (t == 0.0) return rho0;
  const SparseCMatrix& m = L.matrix;
  auto rhs = [&m](const CVector& y, CVector& dy) { dy.noalias() = m * y; };
  EvolveStats local;
  EvolveStats& st = stats ? *stats : local;
  CVector y = integrate_dopri5(rhs, vectorize(rho0), t, opt, &st.ode);
  CMatrix out = unvectorize(y, L.hilbert_dim);
  if (!out.allFinite()) throw NumericalError("evolution produced non-finite entries");
  st.trace_drift = std::abs(out.trace() - rho0.trace());
  return out;
}

DensityMatrix evolve(const Superoperator& L, const DensityMatrix& rho0, double t,
                     const OdeOptions& opt, EvolveStats* stats) {
  if (L.picture != Picture::schrodinger)
    throw std::invalid_argument("evolve expects a Schrödinger-picture generator");
  if (t == 0.0) return rho0;
  EvolveStats local;
  EvolveStats& st = stats ? *stats : local;
  CMatrix out = evolve(L, rho0.data(), t, opt, &st);
  if (st.trace_drift > 1e-8) throw NumericalError("evolution drifted off unit trace");
  if (!is_hermitian(out, 1e-8)) throw NumericalError("evolution lost Hermiticity");
  return DensityMatrix::unchecked(rho0.lattice(), std::move(out));
}

CMatrix heisenberg_evolve(const Superoperator& L, const CMatrix& op, double t,
                          const OdeOptions& opt) {
  if (L.picture == Picture::heisenberg) return evolve(L, op, t, opt);
  return evolve(L.adjoint(), op, t, opt);
}

namespace {

CMatrix normalise_state(CVector v, std::int64_t dim) {
  CMatrix r = unvectorize(v, dim);
  r = 0.5 * (r + r.adjoint()).eval();
  const cd tr = r.trace();
  if (std::abs(tr) < 1e-300) throw NumericalError("steady state candidate has zero trace");
  return r / tr.real();
}

double residual_trace_norm(const Superoperator& L, const CMatrix& rho) {
  const CMatrix res = L.apply(rho);
  if (rho.rows() <= 1024) return trace_norm(res);
  return std::sqrt(static_cast<double>(rho.rows())) * res.norm();
}

CMatrix dense_kernel_state(const Superoperator& L) {
  const CMatrix m(L.matrix);
  Eigen::FullPivLU<CMatrix> lu(m);
  lu.setThreshold(1e-10);
  const auto nullity = m.cols() - lu.rank();
  if (nullity == 0) throw NumericalError("generator has no kernel");
  if (nullity > 1)
    throw NonUniqueSteadyState("generator kernel has dimension " + std::to_string(nullity));
  const CMatrix ker = lu.kernel();
  return normalise_state(ker.col(0), L.hilbert_dim);
}

// Direct factorisation fills in badly on product-structured generators; above
// this size the trace-constrained system is solved iteratively instead.
constexpr std::int64_t kDirectSteadyLimit = 1024;

// GMRES on L with its first row replaced by the trace functional. A unique
// steady state makes the system regular; otherwise two starting guesses
// converge to different solutions.
CMatrix iterative_steady_state(const Superoperator& L) {
  const std::int64_t dim = L.hilbert_dim;
  const std::int64_t big = dim * dim;
  SparseCMatrix m = L.matrix;
  m.prune([](std::int64_t row, std::int64_t, const cd&) { return row != 0; });
  std::vector<Eigen::Triplet<cd, std::int64_t>> trip;
  for (std::int64_t k = 0; k < dim; ++k) trip.emplace_back(0, k * dim + k, 1.0);
  SparseCMatrix trace_row(big, big);
  trace_row.setFromTriplets(trip.begin(), trip.end());
  m += trace_row;
  m.makeCompressed();
  CVector b = CVector::Zero(big);
  b(0) = 1.0;

  // BiCGSTAB with a coarse incomplete LU, shared by both solves; restarted
  // GMRES with a diagonal preconditioner backs it up.
  Eigen::BiCGSTAB<SparseCMatrix, Eigen::IncompleteLUT<cd, std::int64_t>> bicg;
  bicg.preconditioner().setDroptol(1e-2);
  bicg.preconditioner().setFillfactor(1);
  bicg.setTolerance(1e-13);
  bicg.setMaxIterations(2000);
  bicg.compute(m);
  std::optional<Eigen::GMRES<SparseCMatrix>> gmres;
  auto solve_from = [&](const CMatrix& guess) {
    if (bicg.info() == Eigen::Success) {
      CVector v = bicg.solveWithGuess(b, vectorize(guess));
      if (bicg.info() == Eigen::Success && v.allFinite()) return normalise_state(v, dim);
    }
    if (!gmres) {
      gmres.emplace();
      gmres->set_restart(200);
      gmres->setTolerance(1e-13);
      gmres->setMaxIterations(3000);
      gmres->compute(m);
    }
    CVector v = gmres->solveWithGuess(b, vectorize(guess));
    if (gmres->info() != Eigen::Success || !v.allFinite())
      throw NumericalError("iterative steady-state solve did not converge");
    return normalise_state(v, dim);
  };
  const CMatrix mixed = CMatrix::Identity(dim, dim) / static_cast<double>(dim);
  Rng rng(0x5eed57a7eULL);
  CMatrix g(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c)
    for (Eigen::Index r = 0; r < dim; ++r) g(r, c) = cd(rng.normal(), rng.normal());
  CMatrix random_state = g * g.adjoint();
  random_state /= random_state.trace().real();
  const CMatrix r1 = solve_from(mixed);
  const CMatrix r2 = solve_from(random_state);
  if (std::sqrt(static_cast<double>(dim)) * (r1 - r2).norm() > 1e-6)
    throw NonUniqueSteadyState("different initial states relax to different fixed points");
  return r1;
}

}  // namespace

DensityMatrix steady_state(const Superoperator& L, const Lattice& lattice) {
  if (L.picture != Picture::schrodinger)
    throw std::invalid_argument("steady_state expects a Schrödinger-picture generator");
  const std::int64_t dim = L.hilbert_dim;
  const std::int64_t big = dim * dim;

  CMatrix rho;
  bool solved = false;
  if (big > kDirectSteadyLimit) {
    rho = iterative_steady_state(L);
    solved = true;
  } else {
    constexpr double shift = 1e-6;
    SparseCMatrix a = L.matrix;
    a -= shift * sparse_identity(big);
    a.makeCompressed();
    Eigen::SparseLU<SparseCMatrix, Eigen::COLAMDOrdering<std::int64_t>> lu;
    lu.compute(a);
    if (lu.info() == Eigen::Success) {
      auto iterate = [&](const CMatrix& seed) {
        CVector v = vectorize(seed);
        for (int it = 0; it < 60; ++it) {
          CVector next = lu.solve(v);
          if (lu.info() != Eigen::Success || !next.allFinite())
            throw NumericalError("steady-state solve failed");
          const cd tr = unvectorize(next, dim).trace();
          next /= tr;
          const double change = (next - v).cwiseAbs().maxCoeff();
          v.swap(next);
          if (change < 1e-14) break;
        }
        return normalise_state(v, dim);
      };
      const CMatrix mixed = CMatrix::Identity(dim, dim) / static_cast<double>(dim);
      Rng rng(0x5eed57a7eULL);
      CMatrix g(dim, dim);
      for (Eigen::Index c = 0; c < dim; ++c)
        for (Eigen::Index r = 0; r < dim; ++r) g(r, c) = cd(rng.normal(), rng.normal());
      CMatrix random_state = g * g.adjoint();
      random_state /= random_state.trace().real();

      const CMatrix r1 = iterate(mixed);
      const CMatrix r2 = iterate(random_state);
      const double gap = dim <= 1024 ? trace_norm(r1 - r2)
                                     : std::sqrt(static_cast<double>(dim)) * (r1 - r2).norm();
      if (gap > 1e-6)
        throw NonUniqueSteadyState("different initial states relax to different fixed points");
      rho = r1;
      solved = true;
    }
  }
  if (!solved) {
    if (big > kDirectSteadyLimit) throw NumericalError("sparse steady-state factorisation failed");
    rho = dense_kernel_state(L);
  }
  if (residual_trace_norm(L, rho) > 1e-9)
    throw NumericalError("steady state residual exceeds tolerance");
  DensityMatrix out = DensityMatrix::unchecked(lattice, std::move(rho));
  out.validate(1e-10, 1e-10, 1e-8);
  return out;
}

DensityMatrix steady_state_dense(const Superoperator& L, const Lattice& lattice) {
  if (L.hilbert_dim * L.hilbert_dim > kDirectSteadyLimit)
    throw std::invalid_argument("dense steady state limited to 1024-dimensional generators");
  CMatrix rho = dense_kernel_state(L);
  if (residual_trace_norm(L, rho) > 1e-9)
    throw NumericalError("steady state residual exceeds tolerance");
  DensityMatrix out = DensityMatrix::unchecked(lattice, std::move(rho));
  out.validate(1e-10, 1e-10, 1e-8);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<bool> terms_inside(const ParamLindbladian& family, const Region& region) {
  std::vector<bool> inside;
  inside.reserve(family.terms().size());
  for (const auto& t : family.terms()) inside.push_back(region.contains_all(t.support()));
  return inside;
}

ParamVector localize(const ParamLindbladian& family, const ParamVector& x,
                     const ParamVector& x_prime, const Region& region) {
  const auto m = static_cast<std::size_t>(family.parameter_count());
  if (x.size() != m || x_prime.size() != m)
    throw std::invalid_argument("localize: parameter vectors do not match the family");
  const auto inside = terms_inside(family, region);
  std::vector<double> values(m);
  const auto& coords = family.layout()->coordinates;
  for (std::size_t c = 0; c < m; ++c)
    values[c] = inside[static_cast<std::size_t>(coords[c].first)] ? x[c] : x_prime[c];
  return family.params(std::move(values));
}

}  // namespace phaselearn
