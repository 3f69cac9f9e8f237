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

#include "phaselearn/errors.hpp"
#include "phaselearn/learner.hpp"
#include "plan_oracle.hpp"
#include "test_util.hpp"

namespace phaselearn {
namespace {

PlanConstants sample_constants() {
  PlanConstants c;
  c.gamma_prime = 2.0;
  c.mu = 1.5;
  c.J = 3.0;
  c.ell = 2;
  c.k0 = 1;
  c.r0 = 1;
  c.D = 1;
  c.c_prime = 0.8;
  c.n = 8;
  c.M = 8;
  c.W = 2;
  return c;
}

TEST(Plan, MatchesIndependentFormulas) {
  PlanConstants c = sample_constants();
  c.mu = 20.0;
  c.gamma_prime = 6.0;
  c.J = 1.0;
  c.ell = 1;
  c.r0 = 0;
  c.c_prime = 0.05;
  for (Mode mode : {Mode::steady, Mode::general, Mode::slow}) {
    c.f_coeff = 1.0;
    c.f_power = 1.0;
    const LearnerPlan p = plan(0.4, 0.1, 0.2, c, mode);
    const testing::Expected e = testing::expected_plan(0.4, 0.1, 0.2, c, mode);
    EXPECT_EQ(p.r, e.r) << to_string(mode);
    EXPECT_DOUBLE_EQ(p.gamma, e.gamma);
    if (mode == Mode::steady)
      EXPECT_TRUE(std::isinf(p.t_eps));
    else
      EXPECT_DOUBLE_EQ(p.t_eps, e.t_eps);
    EXPECT_EQ(p.N, e.N) << to_string(mode);
    EXPECT_EQ(p.q, required_shadow_count(0.4, 0.2, c.k0, c.n));
  }
}

TEST(Plan, RadiusStepWhenEpsHalves) {
  PlanConstants c = sample_constants();
  const double step = 2.0 * c.xi() * std::log(2.0);
  for (double eps : {0.5, 0.2, 0.05}) {
    int r1 = 0, r2 = 0;
    try {
      r1 = plan(eps, 0.1, 0.1, c, Mode::steady).r;
    } catch (const PlanInfeasible&) {
      continue;
    }
    try {
      r2 = plan(eps / 2, 0.1, 0.1, c, Mode::steady).r;
    } catch (const PlanInfeasible&) {
      continue;
    }
    EXPECT_GE(r2 - r1, static_cast<int>(std::floor(step)));
    EXPECT_LE(r2 - r1, static_cast<int>(std::ceil(step)));
  }
}

TEST(Plan, OverflowGuardReportsExponent) {
  PlanConstants c = sample_constants();
  try {
    plan(0.01, 0.1, 0.1, c, Mode::general);
    FAIL() << "expected an infeasible plan";
  } catch (const PlanInfeasible& e) {
    EXPECT_GE(e.log2_samples(), 63.0);
  }
  EXPECT_THROW(plan(0.0, 0.1, 0.1, c, Mode::steady), ConfigError);
}

TEST(Plan, NonPositiveHorizonIsInfeasible) {
  PlanConstants c = sample_constants();
  c.f_coeff = 1e-4;
  c.f_power = 0.0;
  c.mu = 40.0;
  c.gamma_prime = 20.0;
  EXPECT_THROW(plan(0.5, 0.1, 0.1, c, Mode::slow), PlanInfeasible);
}

TEST(Plan, SlowMixingCostIsPolylogarithmic) {
  // log N / log(f(n)/eps)^(D+2) stays bounded as f(n) grows by many orders.
  PlanConstants c = sample_constants();
  c.mu = 30.0;
  c.gamma_prime = 15.0;
  c.f_power = 2.0;
  std::vector<double> ratios;
  for (int n : {10, 100, 1000, 10000, 100000}) {
    c.n = n;
    double log2n;
    try {
      log2n = plan(0.3, 0.1, 0.1, c, Mode::slow).log2_N;
    } catch (const PlanInfeasible& e) {
      log2n = e.log2_samples();
    }
    const double lf = std::log(c.f_of_n() / 0.3);
    ratios.push_back(log2n / std::pow(lf, c.D + 2));
  }
  for (std::size_t i = 1; i < ratios.size(); ++i) EXPECT_LE(ratios[i], ratios[0] * 1.5);
}

TEST(Plan, JsonRoundTripAndRecompute) {
  PlanConstants c = sample_constants();
  c.mu = 20.0;
  c.gamma_prime = 6.0;
  c.c_prime = 0.05;
  c.J = 1.0;
  c.ell = 1;
  c.r0 = 0;
  const LearnerPlan p = plan(0.4, 0.1, 0.1, c, Mode::general);
  const LearnerPlan back = LearnerPlan::from_json(nlohmann::json::parse(p.to_json().dump()));
  EXPECT_EQ(back.to_json(), p.to_json());
  const LearnerPlan again = plan(back.eps, back.delta, back.delta_prime, back.constants, back.mode);
  EXPECT_EQ(again.to_json().dump(), p.to_json().dump());
}

TEST(Plan, ScaleExampleForPinning) {
  // kappa0 = 14, single-site terms: J = 35, ell = 1, r0 = 0.
  PlanConstants c;
  c.gamma_prime = 14.0;
  c.J = 35.0;
  c.ell = 1;
  c.k0 = 1;
  c.r0 = 0;
  c.D = 1;
  c.c_prime = 2.0 / 3.0;
  c.n = 8;
  c.M = 8;
  const LearnerPlan p = plan(0.3, 0.1, 0.1, c, Mode::steady);
  EXPECT_EQ(p.r, 0);
  EXPECT_EQ(p.m_r, 2);
  EXPECT_EQ(p.q, 2051);
  EXPECT_NEAR(p.gamma, 0.3 / 140.0, 1e-15);
  EXPECT_NEAR(std::log10(static_cast<double>(p.N)), std::log10(4.6e10), 0.05);
}

// ---------------------------------------------------------------------------

std::vector<ShadowSnapshot> random_training(Rng& rng, int count, int m, int n_sites) {
  std::vector<ShadowSnapshot> out(static_cast<std::size_t>(count));
  for (auto& s : out) {
    s.x = testing::random_params(rng, m);
    s.tau = kSteadyTime;
    s.bases.assign(static_cast<std::size_t>(n_sites), 'Z');
    s.outcomes.assign(static_cast<std::size_t>(n_sites), '0');
    for (int i = 0; i < n_sites; ++i) {
      s.bases[static_cast<std::size_t>(i)] = "XYZ"[rng.below(3)];
      s.outcomes[static_cast<std::size_t>(i)] = rng.below(2) ? '1' : '0';
    }
  }
  return out;
}

TEST(NearestPatch, ExamplesAndBruteForce) {
  Rng rng(3);
  auto training = random_training(rng, 100, 12, 2);
  const std::vector<int> coords{0, 2, 3, 7, 8, 11};
  const auto self = nearest_patch(training[42].x, 0.0, 0, training, coords, false);
  EXPECT_EQ(self.index, 42);
  EXPECT_EQ(self.distance, 0.0);

  auto dup = training;
  dup[60].x = dup[10].x;
  EXPECT_EQ(nearest_patch(dup[10].x, 0.0, 0, dup, coords, false).index, 10);

  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testing::random_params(rng, 12);
    std::int64_t best = -1;
    double bd = INFINITY;
    for (std::size_t k = 0; k < training.size(); ++k) {
      double d = 0;
      for (int c : coords) d = std::max(d, std::abs(x[static_cast<std::size_t>(c)] - training[k].x[static_cast<std::size_t>(c)]));
      if (d < bd) {
        bd = d;
        best = static_cast<std::int64_t>(k);
      }
    }
    const auto got = nearest_patch(x, 0.0, 0, training, coords, false);
    EXPECT_EQ(got.index, best);
    EXPECT_EQ(got.distance, bd);
  }
}

TEST(NearestPatch, TimeAndAncillaAware) {
  Rng rng(4);
  auto training = random_training(rng, 3, 2, 1);
  for (auto& s : training) s.x = {0.0, 0.0};
  training[0].tau = 5.0;
  training[1].tau = 1.0;
  training[2].tau = 1.0;
  training[1].omega = 1;
  const std::vector<int> coords{0, 1};
  EXPECT_EQ(nearest_patch(std::vector<double>{0.0, 0.0}, 1.1, 0, training, coords, true).index, 2);
  EXPECT_EQ(nearest_patch(std::vector<double>{0.0, 0.0}, 1.1, 1, training, coords, true).index, 1);
  EXPECT_EQ(nearest_patch(std::vector<double>{0.0, 0.0}, 1.1, 2, training, coords, true).index, -1);
}

TEST(SelectCell, Examples) {
  Rng rng(5);
  auto training = random_training(rng, 10000, 6, 1);
  const std::vector<int> coords{0, 1, 4, 5};
  EXPECT_EQ(select_cell(training[0].x, 0.0, 0, training, coords, 2.0, false).size(), training.size());

  training[7].x = training[3].x;
  const auto dup = select_cell(training[3].x, 0.0, 0, training, coords, 1e-300, false);
  EXPECT_EQ(dup, (std::vector<std::int64_t>{3, 7}));

  // Interior point: each coordinate window has probability gamma.
  const double gamma = 0.5;
  const std::vector<double> x{0.1, -0.2, 0.9, 0.0, 0.3, -0.4};
  const double p = std::pow(gamma, 4);
  const double got = static_cast<double>(select_cell(x, 0.0, 0, training, coords, gamma, false).size());
  EXPECT_LE(std::abs(got - 1e4 * p), 3.0 * std::sqrt(1e4 * p * (1 - p)));
}

TEST(Predict, IdentityDuplicatesAndFallback) {
  Rng rng(6);
  const Lattice lat({4}, Boundary::open);
  auto layout = ParamLayout::build({{0}, {1}, {2}, {3}}, {1, 1, 1, 1});
  LearnerPlan p;
  p.r = 0;
  p.gamma = 0.1;
  p.delta_prime = 0.1;
  p.mode = Mode::steady;

  auto training = random_training(rng, 500, 4, 4);
  const LocalObservable id({1, 2}, CMatrix::Identity(4, 4), "I");
  const auto pi = predict({id}, training[0].x, kSteadyTime, 0, training, p, lat, *layout);
  EXPECT_NEAR(pi.value, 1.0, 1e-12);

  // Every sample at x: prediction is the plain shadow estimate (mean with k=1).
  auto same = training;
  for (auto& s : same) s.x = training[0].x;
  const LocalObservable z1({1}, pauli::z(), "Z1");
  PredictOptions plain;
  plain.mom_batches = 1;
  const auto pd = predict({z1}, training[0].x, kSteadyTime, 0, same, p, lat, *layout, plain);
  double mean = 0.0;
  for (const auto& s : same) mean += snapshot_value(s, z1);
  mean /= static_cast<double>(same.size());
  EXPECT_NEAR(pd.value, mean, 1e-12);
  EXPECT_EQ(pd.counts[0], 500);
  EXPECT_TRUE(pd.warnings.empty());

  // Far-away query with tiny gamma falls back to the nearest patch.
  LearnerPlan tight = p;
  tight.gamma = 1e-9;
  const auto pf = predict({z1, id}, std::vector<double>{0.123, 0.456, 0.789, -0.1}, kSteadyTime, 0,
                          training, tight, lat, *layout);
  EXPECT_EQ(pf.counts[0], 1);
  EXPECT_FALSE(pf.warnings.empty());
  EXPECT_DOUBLE_EQ(pf.value, pf.per_term[0] + pf.per_term[1]);

  const auto again = predict({z1, id}, std::vector<double>{0.123, 0.456, 0.789, -0.1}, kSteadyTime, 0,
                             training, tight, lat, *layout);
  EXPECT_EQ(again.to_json().dump(), pf.to_json().dump());
  EXPECT_THROW(predict({z1}, training[0].x, kSteadyTime, 0, {}, p, lat, *layout), NoMatchingSamples);
}

TEST(Predict, LocalityUnderScrambling) {
  Rng rng(7);
  const Lattice lat({6}, Boundary::open);
  auto layout = ParamLayout::build({{0}, {1}, {2}, {3}, {4}, {5}}, std::vector<int>(6, 1));
  LearnerPlan p;
  p.r = 1;
  p.gamma = 0.3;
  p.delta_prime = 0.1;
  auto training = random_training(rng, 3000, 6, 6);
  const LocalObservable z2({2}, pauli::z(), "Z2");
  const auto coords = patch_coordinates(z2, p.r, lat, *layout);
  EXPECT_EQ(coords, (std::vector<int>{1, 2, 3}));
  auto scrambled = training;
  for (auto& s : scrambled)
    for (int c : {0, 4, 5}) s.x[static_cast<std::size_t>(c)] = rng.uniform(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = testing::random_params(rng, 6);
    EXPECT_EQ(predict({z2}, x, kSteadyTime, 0, training, p, lat, *layout).to_json().dump(),
              predict({z2}, x, kSteadyTime, 0, scrambled, p, lat, *layout).to_json().dump());
  }
}

TEST(Coverage, Examples) {
  Rng rng(8);
  const auto big = random_training(rng, 1000000, 2, 1);
  const auto rep = coverage_report(big, 0.5, 1, {{0, 1}}, false, 0.0, 1, 1);
  EXPECT_EQ(rep.regions[0].cells, 16.0);
  EXPECT_EQ(rep.regions[0].covered_any, 1.0);

  const auto one = random_training(rng, 1, 3, 1);
  const auto rep1 = coverage_report(one, 0.1, 1, {{0, 1}, {2}}, false, 0.0, 2, 1);
  EXPECT_LE(rep1.regions[0].covered_any * rep1.regions[0].cells, 1.0 + 1e-9);
  EXPECT_LE(rep1.regions[1].covered_any * rep1.regions[1].cells, 1.0 + 1e-9);

  // M e^{-N (gamma/2)^m + m log(2/gamma)} with N = 1000, gamma = 0.5, m = 2, M = 3.
  EXPECT_NEAR(coverage_failure_bound(1000, 0.5, 2, 3), 3.0 * std::exp(-1000.0 / 16.0 + 2.0 * std::log(4.0)), 1e-30);
  EXPECT_NEAR(coverage_failure_bound_q(1000, 0.5, 2, 3, 5),
              3.0 * std::exp(-1000.0 / 16.0 / 5.0 + 2.0 * std::log(4.0) + std::log(5.0)), 1e-12);

  // Large grids are subsampled.
  const auto sub = coverage_report(random_training(rng, 100, 8, 1), 0.2, 1, {{0, 1, 2, 3, 4, 5, 6, 7}},
                                   false, 0.0, 1, 3);
  EXPECT_EQ(sub.regions[0].cells_examined, 100000);
  EXPECT_LT(sub.regions[0].covered_any, 0.01);
}

}  // namespace
}  // namespace phaselearn
