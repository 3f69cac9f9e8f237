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

#include "phaselearn/lattice.hpp"

namespace phaselearn {
namespace {

Lattice chain(int n, Boundary b = Boundary::open) { return Lattice({n}, b); }

TEST(Lattice, DistanceExamples) {
  EXPECT_EQ(chain(5).distance(0, 4), 4);
  EXPECT_EQ(chain(5, Boundary::periodic).distance(0, 4), 1);
  Lattice sq({3, 3}, Boundary::open);
  EXPECT_EQ(sq.distance(sq.site_at(std::vector<int>{0, 0}), sq.site_at(std::vector<int>{2, 2})), 4);
  EXPECT_THROW(chain(5).distance(0, 5), std::out_of_range);
}

TEST(Lattice, MetricAxioms) {
  for (const Lattice& lat : {chain(7), chain(7, Boundary::periodic), Lattice({3, 4}, Boundary::periodic),
                             Lattice({3, 3}, Boundary::open)}) {
    const int n = lat.site_count();
    for (int u = 0; u < n; ++u) {
      EXPECT_EQ(lat.distance(u, u), 0);
      for (int v = 0; v < n; ++v) {
        EXPECT_EQ(lat.distance(u, v), lat.distance(v, u));
        for (int w = 0; w < n; ++w) EXPECT_LE(lat.distance(u, w), lat.distance(u, v) + lat.distance(v, w));
      }
    }
  }
}

TEST(Lattice, AncillaDistance) {
  const Lattice lat = chain(4).with_ancillas({0, 3});
  EXPECT_EQ(lat.site_count(), 6);
  EXPECT_EQ(lat.distance(4, 0), 1);
  EXPECT_EQ(lat.distance(4, 2), 3);
  EXPECT_EQ(lat.distance(4, 5), 5);
}

TEST(Region, EnlargeExamples) {
  EXPECT_EQ(enlarge(chain(5), Region::of({2}), 1).sites(), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(enlarge(chain(5, Boundary::periodic), Region::of({0}), 2).sites(),
            (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(enlarge(chain(8), Region::of({3, 4}), 1).sites(), (std::vector<int>{2, 3, 4, 5}));
}

TEST(Region, EnlargeIsMonotone) {
  const Lattice lat({4, 4}, Boundary::open);
  const Region a = Region::of({5, 6});
  EXPECT_EQ(enlarge(lat, a, 0), a);
  for (int r = 0; r < 6; ++r) {
    EXPECT_TRUE(a.is_subset_of(enlarge(lat, a, r)));
    EXPECT_TRUE(enlarge(lat, a, r).is_subset_of(enlarge(lat, a, r + 1)));
  }
}

TEST(Region, BallVolume) {
  const Lattice lat({9, 9}, Boundary::periodic);
  for (int r = 0; r <= 3; ++r) {
    const Region b = Region::ball(lat, 40, r);
    EXPECT_EQ(static_cast<int>(b.size()), 2 * r * r + 2 * r + 1);
    EXPECT_LE(static_cast<int>(b.size()), (2 * r + 1) * (2 * r + 1));
  }
}

TEST(Region, InnerBoundary) {
  const Lattice lat = chain(6);
  EXPECT_EQ(inner_boundary(lat, Region::of({1, 2, 3})), (std::vector<int>{1, 3}));
  EXPECT_TRUE(inner_boundary(lat, Region::all(lat)).empty());
}

TEST(Embed, Examples) {
  const Lattice two = chain(2);
  const LocalObservable z0({0}, pauli::z(), "Z0");
  CMatrix expected = CMatrix::Zero(4, 4);
  expected.diagonal() << 1, 1, -1, -1;
  EXPECT_LT((embed(z0, two) - expected).norm(), 1e-15);

  const Lattice three = chain(3);
  const LocalObservable id({0, 2}, CMatrix::Identity(4, 4), "I");
  EXPECT_LT((embed(id, three) - CMatrix::Identity(8, 8)).norm(), 1e-15);

  const LocalObservable xx({1, 2}, kron(pauli::x(), pauli::x()), "X1*X2");
  EXPECT_NEAR(operator_norm(embed(xx, three)), 1.0, 1e-9);
}

TEST(Embed, TraceAndProductRules) {
  const Lattice lat = chain(4);
  const CMatrix a = kron(pauli::x(), pauli::z()) + kron(pauli::z(), pauli::x());
  const LocalObservable op({1, 3}, a, "A");
  EXPECT_NEAR(std::abs(embed(op, lat).trace() - a.trace() * 4.0), 0.0, 1e-12);

  const LocalObservable left({0}, pauli::y(), "Y0");
  const LocalObservable right({2}, pauli::x(), "X2");
  const LocalObservable joint({0, 2}, kron(pauli::y(), pauli::x()), "Y0*X2");
  EXPECT_LT((embed(left, lat) * embed(right, lat) - embed(joint, lat)).norm(), 1e-14);

  const SparseCMatrix s = embed_sparse(a, std::vector<int>{1, 3}, lat);
  EXPECT_LT((CMatrix(s) - embed(op, lat)).norm(), 1e-14);
}

TEST(Embed, SiteCap) {
  const Lattice big = chain(kDenseSiteCap + 1);
  EXPECT_THROW(embed(LocalObservable({0}, pauli::z(), "Z0"), big), std::length_error);
}

TEST(Observable, RejectsNonHermitian) {
  EXPECT_THROW(LocalObservable({0}, pauli::lowering(), "s"), std::invalid_argument);
  EXPECT_THROW(LocalObservable({0, 1}, pauli::z(), "bad"), std::invalid_argument);
}

TEST(Observable, ParsesLabels) {
  const Lattice lat = chain(4);
  const auto op = parse_pauli_observable("X1*X2", lat);
  EXPECT_EQ(op.support, (std::vector<int>{1, 2}));
  EXPECT_LT((op.matrix - kron(pauli::x(), pauli::x())).norm(), 1e-15);
  const auto swapped = parse_pauli_observable("Z3*X0", lat);
  EXPECT_EQ(swapped.support, (std::vector<int>{0, 3}));
  EXPECT_LT((swapped.matrix - kron(pauli::x(), pauli::z())).norm(), 1e-15);
  EXPECT_THROW(parse_pauli_observable("Q1", lat), std::invalid_argument);
  EXPECT_THROW(parse_pauli_observable("Z9", lat), std::out_of_range);
}

TEST(ParamVector, BoundsChecked) {
  auto layout = ParamLayout::build({{0}, {0, 1}, {1}}, {1, 1, 1});
  EXPECT_NO_THROW(ParamVector(layout, {-1.0, 0.0, 1.0}));
  EXPECT_THROW(ParamVector(layout, {-1.1, 0.0, 1.0}), std::out_of_range);
  EXPECT_THROW(ParamVector(layout, {0.0, 0.0}), std::invalid_argument);
}

TEST(ParamVector, RestrictMatchesEnumeration) {
  // Interleaved site/bond family on an open chain of 6 sites.
  std::vector<std::vector<int>> supports;
  for (int j = 0; j < 6; ++j) {
    supports.push_back({j});
    if (j + 1 < 6) supports.push_back({j, j + 1});
  }
  auto layout = ParamLayout::build(supports, std::vector<int>(supports.size(), 1));
  std::vector<double> vals(supports.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = -1.0 + 0.1 * static_cast<double>(i);
  const ParamVector x(layout, vals);

  // Terms touching site 2: bond(1,2)=3, site 2=4, bond(2,3)=5.
  const ParamSlice s = restrict(x, Region::of({2}));
  EXPECT_EQ(s.coordinates, (std::vector<int>{3, 4, 5}));
  EXPECT_EQ(s.values, (std::vector<double>{vals[3], vals[4], vals[5]}));
  EXPECT_EQ(restrict(s, *layout, Region::of({2})), s);

  const Lattice lat = chain(6);
  EXPECT_EQ(restrict(x, Region::all(lat)).coordinates.size(), vals.size());
  EXPECT_TRUE(restrict(x, Region::of({})).coordinates.empty());

  // |x|_{ball(u,r)}| <= ell (2(r + r0) + 1)^D with ell = 2, r0 = 1.
  for (int u = 0; u < 6; ++u)
    for (int r = 0; r < 4; ++r)
      EXPECT_LE(restrict(x, Region::ball(lat, u, r)).coordinates.size(),
                static_cast<std::size_t>(2 * (2 * (r + 1) + 1)));
}

TEST(Lattice, JsonRoundTrip) {
  const Lattice lat({8}, Boundary::open);
  const auto j = lat.to_json();
  EXPECT_EQ(j.dump(), R"({"boundary":"open","dim":1,"extent":[8],"local_dim":2})");
  EXPECT_EQ(Lattice::from_json(j), lat);
  const Lattice anc = Lattice({3, 2}, Boundary::periodic).with_ancillas({0});
  EXPECT_EQ(Lattice::from_json(anc.to_json()), anc);
  EXPECT_EQ(Region::of({3, 1, 2}).to_json().dump(), "[1,2,3]");
}

}  // namespace
}  // namespace phaselearn
