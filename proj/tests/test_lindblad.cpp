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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "phaselearn/errors.hpp"
#include "phaselearn/lindblad.hpp"
#include "test_util.hpp"

namespace phaselearn {
namespace {

using testing::expm_evolve;
using testing::random_chain_family;
using testing::random_density;
using testing::random_params;

Lattice qubit() { return Lattice({1}, Boundary::open); }

Superoperator single_site(const LocalGenerator& g) {
  return assemble_local(qubit(), {{0}}, {g});
}

Superoperator amplitude_damping(double kappa = 1.0) {
  return single_site({CMatrix::Zero(2, 2), {std::sqrt(kappa) * pauli::lowering()}});
}

Superoperator depolarizing() {
  const double r = 0.5;
  return single_site({CMatrix::Zero(2, 2), {r * pauli::x(), r * pauli::y(), r * pauli::z()}});
}

TEST(Assemble, ZeroGenerator) {
  const Superoperator L = single_site({CMatrix::Zero(2, 2), {}});
  EXPECT_EQ(L.matrix.nonZeros(), 0);
}

TEST(Assemble, AmplitudeDampingHandComputed) {
  // Column-stacked order (rho00, rho10, rho01, rho11).
  CMatrix expected = CMatrix::Zero(4, 4);
  expected(0, 3) = 1.0;
  expected(1, 1) = -0.5;
  expected(2, 2) = -0.5;
  expected(3, 3) = -1.0;
  const CMatrix got(amplitude_damping().matrix);
  EXPECT_LT((got - expected).norm(), 1e-15);
  Eigen::ComplexEigenSolver<CMatrix> es(got);
  std::vector<double> ev;
  for (int i = 0; i < 4; ++i) ev.push_back(es.eigenvalues()(i).real());
  std::sort(ev.begin(), ev.end());
  EXPECT_NEAR(ev[0], -1.0, 1e-14);
  EXPECT_NEAR(ev[1], -0.5, 1e-14);
  EXPECT_NEAR(ev[2], -0.5, 1e-14);
  EXPECT_NEAR(ev[3], 0.0, 1e-14);
}

TEST(Assemble, MatchesLocalSuperoperatorFormula) {
  Rng rng(11);
  const LocalGenerator g{testing::random_hermitian(rng, 2), {testing::random_matrix(rng, 2)}};
  const CMatrix id = CMatrix::Identity(2, 2);
  const CMatrix& h = g.hamiltonian;
  const CMatrix& l = g.jumps[0];
  const CMatrix ll = l.adjoint() * l;
  const CMatrix expected = cd(0, -1) * (kron(id, h) - kron(h.transpose(), id)) + kron(l.conjugate(), l) -
                           0.5 * kron(id, ll) - 0.5 * kron(ll.transpose(), id);
  EXPECT_LT((CMatrix(single_site(g).matrix) - expected).norm(), 1e-13);
  EXPECT_LT((local_superoperator(g) - expected).norm(), 1e-13);
}

TEST(Assemble, LinearInTerms) {
  Rng rng(3);
  const Lattice lat({2}, Boundary::open);
  const auto fam = random_chain_family(lat, rng);
  const auto x = fam.params(random_params(rng, fam.parameter_count()));
  const auto gens = fam.generators(x);
  SparseCMatrix sum(16, 16);
  for (std::size_t j = 0; j < gens.size(); ++j)
    sum += assemble_local(lat, {fam.terms()[j].support()}, {gens[j]}).matrix;
  EXPECT_LT(CMatrix(sum - assemble(fam, x).matrix).norm(), 1e-13);
}

TEST(Assemble, TracePreservingAndAdjoint) {
  Rng rng(5);
  const Lattice lat({3}, Boundary::open);
  const auto fam = random_chain_family(lat, rng);
  for (int trial = 0; trial < 5; ++trial) {
    const auto L = assemble(fam, fam.params(random_params(rng, fam.parameter_count())));
    EXPECT_LE(L.trace_residual(), 1e-10);
    const auto Ls = L.adjoint();
    EXPECT_EQ(Ls.picture, Picture::heisenberg);
    const CVector a = vectorize(testing::random_matrix(rng, 8));
    const CVector b = vectorize(testing::random_matrix(rng, 8));
    const cd lhs = a.dot(L.matrix * b);
    const cd rhs = (Ls.matrix * a).dot(b);
    EXPECT_LT(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs)));
    // Unitality of the Heisenberg form.
    const CMatrix id = CMatrix::Identity(8, 8);
    EXPECT_LT(Ls.apply(id).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Assemble, RejectsOutOfBoundsAndCap) {
  Rng rng(1);
  const auto fam = random_chain_family(Lattice({2}, Boundary::open), rng);
  std::vector<double> bad(static_cast<std::size_t>(fam.parameter_count()), 0.0);
  bad[0] = 1.5;
  EXPECT_THROW(fam.params(bad), std::out_of_range);
  const Lattice big({kDenseSiteCap + 1}, Boundary::open);
  EXPECT_THROW(assemble_local(big, {}, {}), std::invalid_argument);
}

TEST(Assemble, ExportCoo) {
  std::ostringstream os;
  amplitude_damping().export_coo(os);
  const std::string out = os.str();
  EXPECT_NE(out.find("0 3 1 0\n"), std::string::npos);
  EXPECT_NE(out.find("3 3 -1 0\n"), std::string::npos);
  EXPECT_EQ(std::count(out.begin(), out.end(), '\n'), 4);
}

TEST(Term, StrengthCertifiedOverBox) {
  const LindbladTerm t({0}, 1,
                       [](std::span<const double> p) {
                         return LocalGenerator{p[0] * pauli::z(), {std::sqrt(2.0) * pauli::lowering()}};
                       },
                       "t");
  // 2 |x Z| + 2 |sqrt2 sigma|^2 maximised at x = +-1.
  EXPECT_NEAR(t.strength(), 2.0 + 4.0, 1e-9);
}

TEST(Term, RejectsMalformedGenerators) {
  const Lattice lat({2}, Boundary::open);
  std::vector<LindbladTerm> terms;
  terms.emplace_back(std::vector<int>{0, 1}, 0,
                     [](std::span<const double>) { return LocalGenerator{pauli::z(), {}}; }, "small");
  EXPECT_THROW(ParamLindbladian(lat, terms), std::invalid_argument);
  std::vector<LindbladTerm> bad;
  bad.emplace_back(std::vector<int>{0}, 0,
                   [](std::span<const double>) { return LocalGenerator{pauli::lowering(), {}}; }, "nh");
  EXPECT_THROW(ParamLindbladian(lat, bad), std::invalid_argument);
}

TEST(Evolve, ZeroGeneratorIsIdentity) {
  Rng rng(2);
  const Superoperator L = single_site({CMatrix::Zero(2, 2), {}});
  const CMatrix rho = random_density(rng, 2);
  EXPECT_LT((evolve(L, rho, 7.3) - rho).norm(), 1e-15);
}

TEST(Evolve, TimeZeroIsExact) {
  Rng rng(2);
  const CMatrix rho = random_density(rng, 2);
  const CMatrix out = evolve(amplitude_damping(), rho, 0.0);
  EXPECT_TRUE(out == rho);
}

TEST(Evolve, AmplitudeDampingClosedForm) {
  CMatrix one = CMatrix::Zero(2, 2);
  one(1, 1) = 1.0;
  for (double t : {0.1, 0.7, 2.0, 5.0}) {
    const CMatrix out = evolve(amplitude_damping(), one, t);
    EXPECT_NEAR(out(1, 1).real(), std::exp(-t), 1e-9);
    EXPECT_NEAR(out(0, 0).real(), 1.0 - std::exp(-t), 1e-9);
  }
}

TEST(Evolve, MatchesDenseExponential) {
  Rng rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const Lattice lat({1 + trial % 3}, Boundary::open);
    const auto fam = random_chain_family(lat, rng);
    const auto L = assemble(fam, fam.params(random_params(rng, fam.parameter_count())));
    const CMatrix rho = random_density(rng, lat.hilbert_dim());
    const double t = rng.uniform(0.0, 5.0);
    EXPECT_LE(trace_norm(evolve(L, rho, t) - expm_evolve(L, rho, t)), 1e-7) << "trial " << trial;
  }
}

TEST(Evolve, SemigroupAndContraction) {
  Rng rng(23);
  const Lattice lat({2}, Boundary::open);
  const auto fam = random_chain_family(lat, rng);
  const auto L = assemble(fam, fam.params(random_params(rng, fam.parameter_count())));
  for (int trial = 0; trial < 4; ++trial) {
    const CMatrix rho = random_density(rng, 4), sigma = random_density(rng, 4);
    const double s = rng.uniform(0.0, 5.0), t = rng.uniform(0.0, 5.0);
    EXPECT_LE(trace_norm(evolve(L, evolve(L, rho, s), t) - evolve(L, rho, s + t)), 1e-7);
    EXPECT_LE(trace_norm(evolve(L, rho, t) - evolve(L, sigma, t)), trace_norm(rho - sigma) + 1e-8);
  }
}

TEST(Evolve, PreservesDensityMatrixInvariants) {
  Rng rng(29);
  const Lattice lat({3}, Boundary::open);
  const auto fam = random_chain_family(lat, rng);
  const auto L = assemble(fam, fam.params(random_params(rng, fam.parameter_count())));
  const DensityMatrix rho(lat, random_density(rng, 8));
  EvolveStats stats;
  const DensityMatrix out = evolve(L, rho, 2.0, {}, &stats);
  EXPECT_LE(stats.trace_drift, 1e-8);
  EXPECT_NO_THROW(out.validate(1e-8, 1e-8, 1e-8));
}

TEST(Evolve, RejectsNegativeTimeAndStiffness) {
  EXPECT_THROW(evolve(amplitude_damping(), CMatrix::Identity(2, 2) / 2.0, -1.0), std::invalid_argument);
  OdeOptions tight;
  tight.max_steps = 3;
  EXPECT_THROW(evolve(amplitude_damping(1e6), CMatrix::Identity(2, 2) / 2.0, 10.0, tight), NumericalError);
}

TEST(Heisenberg, IdentityAndZeroGenerator) {
  Rng rng(31);
  const Lattice lat({2}, Boundary::open);
  const auto fam = random_chain_family(lat, rng);
  const auto L = assemble(fam, fam.params(random_params(rng, fam.parameter_count())));
  const CMatrix id = CMatrix::Identity(4, 4);
  EXPECT_LT((heisenberg_evolve(L, id, 1.5) - id).norm(), 1e-9);
  const Superoperator zero = single_site({CMatrix::Zero(2, 2), {}});
  const CMatrix o = pauli::x();
  EXPECT_LT((heisenberg_evolve(zero, o, 3.0) - o).norm(), 1e-15);
}

TEST(Heisenberg, Duality) {
  Rng rng(37);
  const Lattice lat({2}, Boundary::open);
  const auto fam = random_chain_family(lat, rng);
  for (int trial = 0; trial < 5; ++trial) {
    const auto L = assemble(fam, fam.params(random_params(rng, fam.parameter_count())));
    const CMatrix rho = random_density(rng, 4);
    const CMatrix o = testing::random_hermitian(rng, 4);
    const double t = rng.uniform(0.0, 3.0);
    const cd lhs = (o * evolve(L, rho, t)).trace();
    const cd rhs = (heisenberg_evolve(L, o, t) * rho).trace();
    EXPECT_LE(std::abs(lhs - rhs), 1e-8);
  }
}

TEST(SteadyState, SingleQubitExamples) {
  const DensityMatrix dep = steady_state(depolarizing(), qubit());
  EXPECT_LT((dep.data() - CMatrix::Identity(2, 2) / 2.0).norm(), 1e-10);
  const DensityMatrix ad = steady_state(amplitude_damping(), qubit());
  CMatrix zero = CMatrix::Zero(2, 2);
  zero(0, 0) = 1.0;
  EXPECT_LT((ad.data() - zero).norm(), 1e-10);
}

TEST(SteadyState, DegenerateKernelIsAnError) {
  const Superoperator dephasing = single_site({CMatrix::Zero(2, 2), {pauli::z()}});
  EXPECT_THROW(steady_state(dephasing, qubit()), NonUniqueSteadyState);
  EXPECT_THROW(steady_state_dense(dephasing, qubit()), NonUniqueSteadyState);
}

TEST(SteadyState, ResidualFixityAndDenseAgreement) {
  Rng rng(41);
  const Lattice lat({3}, Boundary::open);
  const auto fam = random_chain_family(lat, rng);
  const auto L = assemble(fam, fam.params(random_params(rng, fam.parameter_count())));
  const DensityMatrix rho = steady_state(L, lat);
  EXPECT_LE(trace_norm(L.apply(rho.data())), 1e-9);
  EXPECT_LE(trace_norm(steady_state_dense(L, lat).data() - rho.data()), 1e-8);
  for (double t : {1.0, 10.0}) EXPECT_LE(trace_norm(evolve(L, rho.data(), t) - rho.data()), 1e-7);
}

TEST(SteadyState, IterativePathOnLargerChains) {
  Rng rng(43);
  const Lattice lat({6}, Boundary::open);
  const auto fam = random_chain_family(lat, rng);
  const auto L = assemble(fam, fam.params(random_params(rng, fam.parameter_count())));
  const DensityMatrix rho = steady_state(L, lat);
  EXPECT_LE(std::sqrt(64.0) * L.apply(rho.data()).norm(), 1e-9);
  EXPECT_LE(trace_norm(evolve(L, rho.data(), 2.0) - rho.data()), 1e-7);

  std::vector<LindbladTerm> terms;
  for (int j = 0; j < 6; ++j)
    terms.emplace_back(std::vector<int>{j}, 0,
                       [](std::span<const double>) {
                         return LocalGenerator{CMatrix::Zero(2, 2), {pauli::z()}};
                       },
                       "dephase");
  const ParamLindbladian deph(lat, std::move(terms));
  EXPECT_ANY_THROW(steady_state(assemble(deph, deph.zero_params()), lat));
}

TEST(DensityMatrix, ValidationAndPartialTrace) {
  const Lattice lat({2}, Boundary::open);
  EXPECT_THROW(DensityMatrix(lat, CMatrix::Identity(4, 4)), NumericalError);
  CMatrix neg = CMatrix::Zero(4, 4);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  EXPECT_THROW(DensityMatrix(lat, neg), NumericalError);

  Rng rng(43);
  const CMatrix a = random_density(rng, 2), b = random_density(rng, 2);
  const DensityMatrix ab = product_state(lat, {a, b});
  EXPECT_LT((ab.reduced(std::vector<int>{0}) - a).norm(), 1e-14);
  EXPECT_LT((ab.reduced(std::vector<int>{1}) - b).norm(), 1e-14);
  EXPECT_NEAR(ab.expectation(LocalObservable({1}, pauli::z(), "Z1")), (pauli::z() * b).trace().real(), 1e-14);
}

TEST(Localize, Examples) {
  Rng rng(47);
  const Lattice lat({6}, Boundary::open);
  const auto fam = random_chain_family(lat, rng);
  const auto x = fam.params(random_params(rng, fam.parameter_count()));
  const auto xp = fam.params(random_params(rng, fam.parameter_count()));
  EXPECT_EQ(localize(fam, x, xp, Region::all(lat)).values(), x.values());
  EXPECT_EQ(localize(fam, x, xp, Region::of({})).values(), xp.values());
  const auto mixed = localize(fam, x, xp, Region::ball(lat, 2, 1));
  for (std::size_t j = 0; j < fam.terms().size(); ++j) {
    const auto& s = fam.terms()[j].support();
    const bool inside = std::all_of(s.begin(), s.end(), [](int v) { return v >= 1 && v <= 3; });
    EXPECT_EQ(mixed[j], inside ? x[j] : xp[j]) << "term " << j;
  }
}

}  // namespace
}  // namespace phaselearn
