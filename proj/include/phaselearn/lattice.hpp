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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "phaselearn/linalg.hpp"

namespace phaselearn {

/// Largest site count for which full-space matrices are formed.
inline constexpr int kDenseSiteCap = 12;

enum class Boundary { open, periodic };

/// Hypercubic lattice in one or two dimensions with l1 distance, optionally
/// extended by ancilla sites. Sites are numbered row-major; site 0 is the
/// leftmost Kronecker factor (most significant digit of a basis index).
/// Ancillas come after all system sites and sit one step away from the
/// system site they are attached to.
class Lattice {
 public:
  Lattice(std::vector<int> extent, Boundary boundary, int local_dim = 2);

  /// Copy of this lattice with one ancilla per entry of `attach_sites`.
  Lattice with_ancillas(std::vector<int> attach_sites) const;
  Lattice without_ancillas() const;

  int dimension() const { return static_cast<int>(extent_.size()); }
  const std::vector<int>& extent() const { return extent_; }
  Boundary boundary() const { return boundary_; }
  int local_dim() const { return local_dim_; }
  int system_sites() const { return system_sites_; }
  int site_count() const { return system_sites_ + static_cast<int>(ancillas_.size()); }
  bool is_ancilla(int site) const { return site >= system_sites_; }
  const std::vector<int>& ancilla_attachments() const { return ancillas_; }
  std::int64_t hilbert_dim() const;

  std::vector<int> coordinates(int site) const;
  int site_at(std::span<const int> coords) const;
  int distance(int u, int v) const;
  /// Largest distance between two sites.
  int diameter() const;
  /// System sites with fewer than 2D system neighbours (none when periodic).
  std::vector<int> edge_sites() const;
  std::vector<int> neighbours(int site) const;

  nlohmann::json to_json() const;
  static Lattice from_json(const nlohmann::json& j);

  bool operator==(const Lattice&) const = default;

 private:
  void check_site(int site) const;
  int system_distance(int u, int v) const;

  std::vector<int> extent_;
  Boundary boundary_;
  int local_dim_;
  int system_sites_;
  std::vector<int> ancillas_;
};

/// Sorted, duplicate-free set of sites.
class Region {
 public:
  enum class Kind { ball, explicit_sites };

  Region() = default;
  static Region of(std::vector<int> sites);
  static Region ball(const Lattice& lattice, int center, int radius);
  static Region all(const Lattice& lattice);

  const std::vector<int>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  bool contains(int site) const;
  bool contains_all(std::span<const int> sites) const;
  bool intersects(std::span<const int> sites) const;
  bool is_subset_of(const Region& other) const { return other.contains_all(sites_); }

  Kind kind() const { return kind_; }
  int center() const { return center_; }
  int radius() const { return radius_; }

  nlohmann::json to_json() const { return sites_; }

  bool operator==(const Region& other) const { return sites_ == other.sites_; }

 private:
  std::vector<int> sites_;
  Kind kind_ = Kind::explicit_sites;
  int center_ = -1;
  int radius_ = -1;
};

/// Union of radius-r balls around every site of `region`.
Region enlarge(const Lattice& lattice, const Region& region, int r);

/// Sites of `region` that have a neighbour outside it.
std::vector<int> inner_boundary(const Lattice& lattice, const Region& region);

/// Largest pairwise distance within a site set (0 for fewer than two sites).
int diameter_of(const Lattice& lattice, std::span<const int> sites);

/// Hermitian operator on a handful of sites. The matrix is in the Kronecker
/// order of the (sorted) support.
struct LocalObservable {
  std::vector<int> support;
  CMatrix matrix;
  std::string label;

  LocalObservable() = default;
  LocalObservable(std::vector<int> support, CMatrix matrix, std::string label,
                  int local_dim = 2);

  double norm() const { return operator_norm(matrix); }
};

/// Parses "Z3", "X1*X2", "I0" style Pauli-product labels.
LocalObservable parse_pauli_observable(std::string_view label, const Lattice& lattice);

/// Dense embedding into the full Hilbert space (site count <= kDenseSiteCap).
CMatrix embed(const LocalObservable& op, const Lattice& lattice);

/// Sparse embedding of a local matrix acting on `support`.
SparseCMatrix embed_sparse(const CMatrix& local, std::span<const int> support,
                           const Lattice& lattice);

/// Coordinate bookkeeping of a parameterised family: which Lindbladian term
/// each coordinate belongs to, and where each term lives.
struct ParamLayout {
  std::vector<std::vector<int>> term_supports;
  std::vector<int> term_offsets;                  // first coordinate of each term
  std::vector<int> term_param_counts;
  std::vector<std::pair<int, int>> coordinates;   // coordinate -> (term, slot)

  static std::shared_ptr<const ParamLayout> build(
      std::vector<std::vector<int>> supports, std::vector<int> param_counts);

  int parameter_count() const { return static_cast<int>(coordinates.size()); }
  int term_count() const { return static_cast<int>(term_supports.size()); }
};

/// Coordinates whose term support intersects `sites`, in increasing order.
std::vector<int> restricted_coordinates(const ParamLayout& layout,
                                        std::span<const int> sites);

/// Point of the parameter box [-1, 1]^m.
class ParamVector {
 public:
  ParamVector(std::shared_ptr<const ParamLayout> layout, std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> term_params(int term) const;
  const std::shared_ptr<const ParamLayout>& layout() const { return layout_; }

 private:
  std::shared_ptr<const ParamLayout> layout_;
  std::vector<double> values_;
};

/// Sub-vector x|_S, keeping original coordinate indices.
struct ParamSlice {
  std::vector<int> coordinates;
  std::vector<double> values;

  bool operator==(const ParamSlice&) const = default;
};

ParamSlice restrict(const ParamVector& x, const Region& region);
ParamSlice restrict(const ParamSlice& slice, const ParamLayout& layout, const Region& region);

}  // namespace phaselearn
