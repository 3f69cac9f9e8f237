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
#include <numbers>

#include "phaselearn/models.hpp"
#include "test_util.hpp"

namespace phaselearn {
namespace {

using testing::expm_evolve;
using testing::random_params;

Lattice chain(int n) { return Lattice({n}, Boundary::open); }

TEST(Pinning, AllMinusOneGivesAllZeroSteadyState) {
  const auto fam = build_pinning_family(chain(3), 2.0);
  const auto x = fam.params(std::vector<double>(3, -1.0));
  const auto rho = steady_state(assemble(fam, x), fam.lattice());
  CMatrix expected = CMatrix::Zero(8, 8);
  expected(0, 0) = 1.0;
  EXPECT_LT(trace_norm(rho.data() - expected), 1e-9);
}

TEST(Pinning, SingleSiteClosedForm) {
  Rng rng(5);
  const Lattice lat = chain(4);
  const auto fam = build_pinning_family(lat, 1.3);
  for (int trial = 0; trial < 3; ++trial) {
    const auto xs = random_params(rng, 4);
    const auto rho = steady_state(assemble(fam, fam.params(xs)), lat);
    const double theta = std::numbers::pi / 4.0 * (xs[2] + 1.0);
    EXPECT_NEAR(rho.expectation(LocalObservable({2}, pauli::z(), "Z2")), std::cos(2.0 * theta), 1e-9);
  }
}

TEST(Pinning, StrengthAndRadius) {
  const auto fam = build_pinning_family(chain(5), 4.0);
  EXPECT_NEAR(fam.strength(), 2.5 * 4.0, 1e-9);
  EXPECT_EQ(fam.term_radius(), 0);
  EXPECT_EQ(fam.params_per_site(), 1);
  EXPECT_THROW(build_pinning_family(chain(2), 0.0), std::invalid_argument);
}

TEST(Pinning, OracleMatchesEvolution) {
  Rng rng(7);
  const Model model("pinning", {{"kappa0", 1.5}}, chain(4));
  const auto& fam = model.family();
  const CMatrix rho0 = model.reference_state().data();
  const std::vector<std::string> labels{"Z0", "X1", "Y2", "Z3", "X0*Z2", "Y1*Y3"};
  for (int trial = 0; trial < 20; ++trial) {
    const auto xs = random_params(rng, 4);
    const double t = rng.uniform(0.0, 4.0);
    const auto op = parse_pauli_observable(labels[static_cast<std::size_t>(trial) % labels.size()], fam.lattice());
    const CMatrix rho = evolve(assemble(fam, fam.params(xs)), rho0, t);
    const double exact = (embed(op, fam.lattice()) * rho).trace().real();
    EXPECT_NEAR(model.oracle(xs, t, op), exact, 1e-6) << "trial " << trial;
  }
  const auto xs = random_params(rng, 4);
  const auto op = parse_pauli_observable("Z1", fam.lattice());
  const auto rho = steady_state(assemble(fam, fam.params(xs)), fam.lattice());
  EXPECT_NEAR(model.oracle(xs, kSteadyTime, op), rho.expectation(op), 1e-6);
}

TEST(Pinning, OracleAtLargeSize) {
  const Model model("pinning", {{"kappa0", 1.0}}, chain(50));
  std::vector<double> xs(50, 0.0);
  xs[17] = 0.5;
  const auto op = parse_pauli_observable("Z17", model.system_lattice());
  EXPECT_NEAR(model.oracle(xs, kSteadyTime, op), std::cos(2.0 * std::numbers::pi / 4.0 * 1.5), 1e-12);
  const PhaseState s = model.generate_state(xs, kSteadyTime);
  EXPECT_TRUE(s.is_product());
}

TEST(Tfim, DecoupledLimitIsProduct) {
  const Lattice lat = chain(3);
  const auto fam = build_dissipative_tfim(lat, 0.0, 1.0);
  std::vector<double> xs(static_cast<std::size_t>(fam.parameter_count()), 0.0);
  // Fields on site terms only; bond terms stay at zero.
  for (std::size_t j = 0; j < fam.terms().size(); ++j)
    if (fam.terms()[j].support().size() == 1) xs[j] = 0.3 * static_cast<double>(j % 3) - 0.2;
  const auto rho = steady_state(assemble(fam, fam.params(xs)), lat);
  CMatrix expected = CMatrix::Zero(8, 8);
  expected(0, 0) = 1.0;
  EXPECT_LT(trace_norm(rho.data() - expected), 1e-9);
}

TEST(Tfim, SteadyStateAgreesWithLongEvolution) {
  const Lattice lat = chain(2);
  const auto fam = build_dissipative_tfim(lat, 0.5, 1.0);
  const auto L = assemble(fam, fam.zero_params());
  const auto rho = steady_state_dense(L, lat);
  CMatrix start = CMatrix::Zero(4, 4);
  start(0, 0) = 1.0;
  const CMatrix late = expm_evolve(L, start, 50.0);
  const auto z0 = parse_pauli_observable("Z0", lat);
  EXPECT_NEAR(rho.expectation(z0), (embed(z0, lat) * late).trace().real(), 1e-5);
  EXPECT_LE(trace_norm(L.apply(rho.data())), 1e-9);
}

TEST(Tfim, GeneratorIsLinearInParameters) {
  Rng rng(9);
  const Lattice lat = chain(3);
  const auto fam = build_dissipative_tfim(lat, 0.5, 1.0);
  const auto xs = random_params(rng, fam.parameter_count());
  const double alpha = 0.37;
  std::vector<double> scaled = xs;
  for (auto& v : scaled) v *= alpha;
  const SparseCMatrix l0 = assemble(fam, fam.zero_params()).matrix;
  const SparseCMatrix lx = assemble(fam, fam.params(xs)).matrix;
  const SparseCMatrix la = assemble(fam, fam.params(scaled)).matrix;
  EXPECT_LT(CMatrix((la - l0) - alpha * (lx - l0)).norm(), 1e-12);
}

TEST(Tfim, LayoutAndRestriction) {
  const Lattice lat = chain(6);
  const auto fam = build_dissipative_tfim(lat, 0.5, 1.0);
  EXPECT_EQ(fam.parameter_count(), 11);
  EXPECT_EQ(fam.params_per_site(), 2);
  EXPECT_EQ(fam.term_radius(), 1);
  const auto coords = restricted_coordinates(*fam.layout(), std::vector<int>{2});
  ASSERT_EQ(coords.size(), 3u);
  EXPECT_EQ(fam.terms()[static_cast<std::size_t>(coords[0])].name(), "bond(1,2)");
  EXPECT_EQ(fam.terms()[static_cast<std::size_t>(coords[1])].name(), "field(2)");
  EXPECT_EQ(fam.terms()[static_cast<std::size_t>(coords[2])].name(), "bond(2,3)");
}

TEST(Catalog, EveryEntryPassesInvariants) {
  Rng rng(13);
  for (const auto& name : catalog_names()) {
    const Model model(name, {}, chain(3));
    EXPECT_EQ(model.ancilla_menu_size(), 2);
    for (int omega = 0; omega < model.ancilla_menu_size(); ++omega) {
      const auto& fam = model.family(omega);
      for (int trial = 0; trial < 10; ++trial) {
        const auto L = assemble(fam, fam.params(random_params(rng, fam.parameter_count())));
        EXPECT_LE(L.trace_residual(), 1e-10);
        const auto dim = fam.lattice().hilbert_dim();
        EXPECT_LE(L.adjoint().apply(CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff(), 1e-10);
      }
    }
    EXPECT_EQ(model.family(1).lattice().site_count(), 5);
  }
  EXPECT_THROW(Model("unknown", {}, chain(2)), ConfigError);
  EXPECT_THROW(Model("pinning", {{"g", 1.0}}, chain(2)), ConfigError);
}

TEST(GenerateState, ReferenceAndLongTimes) {
  Rng rng(17);
  const Model tfim("dissipative_tfim", {}, chain(2));
  const auto xs = random_params(rng, tfim.parameter_count());
  for (int omega = 0; omega < 2; ++omega) {
    const PhaseState s = tfim.generate_state(xs, 0.0, omega);
    EXPECT_TRUE(s.dense().data() == tfim.reference_state(omega).data());
  }

  const Model pin("pinning", {{"kappa0", 2.0}}, chain(3));
  const auto xp = random_params(rng, 3);
  const PhaseState steady = pin.generate_state(xp, kSteadyTime);
  const auto& fam = pin.family();
  const auto L = assemble(fam, fam.params(xp));
  const CMatrix exact_steady = steady_state(L, fam.lattice()).data();
  EXPECT_LE(trace_norm(steady.to_dense().data() - exact_steady), 1e-8);
  const CMatrix late = evolve(L, pin.reference_state().data(), 20.0 / 2.0);
  EXPECT_LE(trace_norm(late - exact_steady), 1e-6);

  // Ancilla option evolves densely.
  const PhaseState with_anc = pin.generate_state(xp, 1.0, 1);
  EXPECT_FALSE(with_anc.is_product());
  EXPECT_EQ(with_anc.lattice().site_count(), 5);
}

TEST(Sampling, DeterministicAndUniform) {
  EXPECT_THROW(sample_parameters(4, 0, kSteadyTime, 1), std::invalid_argument);
  const auto a = sample_parameters(5, 100, 3.0, 42);
  const auto b = sample_parameters(5, 100, 3.0, 42);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].tau, b[i].tau);
    EXPECT_GE(a[i].tau, 0.0);
    EXPECT_LE(a[i].tau, 3.0);
  }
  const int n = 10000;
  const auto big = sample_parameters(3, n, kSteadyTime, 7);
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (const auto& s : big) mean += s.x[static_cast<std::size_t>(c)];
    mean /= n;
    EXPECT_LE(std::abs(mean), 3.0 / std::sqrt(3.0 * n));
  }
  EXPECT_TRUE(std::isinf(big[0].tau));
  const std::vector<int> menu{0, 1};
  const auto mixed = sample_parameters(2, 200, 1.0, 9, menu);
  int ones = 0;
  for (const auto& s : mixed) ones += s.omega;
  EXPECT_GT(ones, 50);
  EXPECT_LT(ones, 150);
}

}  // namespace
}  // namespace phaselearn
