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

#include "phaselearn/lattice.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace phaselearn {

Lattice::Lattice(std::vector<int> extent, Boundary boundary, int local_dim)
    : extent_(std::move(extent)), boundary_(boundary), local_dim_(local_dim) {
  if (extent_.empty() || extent_.size() > 2)
    throw std::invalid_argument("lattice dimension must be 1 or 2");
  for (int e : extent_)
    if (e <= 0) throw std::invalid_argument("lattice extents must be positive");
  if (local_dim_ <= 0) throw std::invalid_argument("local dimension must be positive");
  system_sites_ = std::accumulate(extent_.begin(), extent_.end(), 1, std::multiplies<>());
}

Lattice Lattice::with_ancillas(std::vector<int> attach_sites) const {
  Lattice out = without_ancillas();
  for (int s : attach_sites) {
    if (s < 0 || s >= system_sites_)
      throw std::invalid_argument("ancilla must attach to a system site");
  }
  out.ancillas_ = std::move(attach_sites);
  return out;
}

Lattice Lattice::without_ancillas() const {
  Lattice out = *this;
  out.ancillas_.clear();
  return out;
}

std::int64_t Lattice::hilbert_dim() const { return ipow(local_dim_, site_count()); }

void Lattice::check_site(int site) const {
  if (site < 0 || site >= site_count())
    throw std::out_of_range("site index " + std::to_string(site) + " outside lattice");
}

std::vector<int> Lattice::coordinates(int site) const {
  check_site(site);
  if (is_ancilla(site)) throw std::invalid_argument("ancilla sites have no coordinates");
  std::vector<int> c(extent_.size());
  for (int axis = dimension() - 1; axis >= 0; --axis) {
    c[axis] = site % extent_[axis];
    site /= extent_[axis];
  }
  return c;
}

int Lattice::site_at(std::span<const int> coords) const {
  if (coords.size() != extent_.size()) throw std::invalid_argument("coordinate rank mismatch");
  int site = 0;
  for (int axis = 0; axis < dimension(); ++axis) {
    if (coords[axis] < 0 || coords[axis] >= extent_[axis])
      throw std::out_of_range("coordinate outside lattice");
    site = site * extent_[axis] + coords[axis];
  }
  return site;
}

int Lattice::system_distance(int u, int v) const {
  const auto cu = coordinates(u);
  const auto cv = coordinates(v);
  int d = 0;
  for (int axis = 0; axis < dimension(); ++axis) {
    int delta = std::abs(cu[axis] - cv[axis]);
    if (boundary_ == Boundary::periodic) delta = std::min(delta, extent_[axis] - delta);
    d += delta;
  }
  return d;
}

int Lattice::distance(int u, int v) const {
  check_site(u);
  check_site(v);
  if (u == v) return 0;
  int hops = 0;
  if (is_ancilla(u)) {
    u = ancillas_[u - system_sites_];
    ++hops;
  }
  if (is_ancilla(v)) {
    v = ancillas_[v - system_sites_];
    ++hops;
  }
  return hops + system_distance(u, v);
}

int Lattice::diameter() const {
  int d = 0;
  for (int u = 0; u < site_count(); ++u)
    for (int v = u + 1; v < site_count(); ++v) d = std::max(d, distance(u, v));
  return d;
}

std::vector<int> Lattice::neighbours(int site) const {
  std::vector<int> out;
  for (int v = 0; v < site_count(); ++v)
    if (v != site && distance(site, v) == 1) out.push_back(v);
  return out;
}

std::vector<int> Lattice::edge_sites() const {
  std::vector<int> out;
  if (boundary_ == Boundary::periodic) return out;
  for (int s = 0; s < system_sites_; ++s) {
    int count = 0;
    for (int v = 0; v < system_sites_; ++v)
      if (v != s && system_distance(s, v) == 1) ++count;
    if (count < 2 * dimension()) out.push_back(s);
  }
  return out;
}

nlohmann::json Lattice::to_json() const {
  nlohmann::json j = {{"dim", dimension()},
                      {"extent", extent_},
                      {"boundary", boundary_ == Boundary::open ? "open" : "periodic"},
                      {"local_dim", local_dim_}};
  if (!ancillas_.empty()) j["ancilla_attach"] = ancillas_;
  return j;
}

Lattice Lattice::from_json(const nlohmann::json& j) {
  const auto extent = j.at("extent").get<std::vector<int>>();
  if (j.contains("dim") && j.at("dim").get<int>() != static_cast<int>(extent.size()))
    throw std::invalid_argument("lattice 'dim' disagrees with 'extent'");
  const std::string b = j.value("boundary", std::string("open"));
  if (b != "open" && b != "periodic") throw std::invalid_argument("unknown boundary '" + b + "'");
  Lattice out(extent, b == "open" ? Boundary::open : Boundary::periodic, j.value("local_dim", 2));
  if (j.contains("ancilla_attach"))
    out = out.with_ancillas(j.at("ancilla_attach").get<std::vector<int>>());
  return out;
}

Region Region::of(std::vector<int> sites) {
  Region r;
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  r.sites_ = std::move(sites);
  return r;
}

Region Region::ball(const Lattice& lattice, int center, int radius) {
  if (radius < 0) throw std::invalid_argument("ball radius must be non-negative");
  std::vector<int> sites;
  for (int v = 0; v < lattice.site_count(); ++v)
    if (lattice.distance(center, v) <= radius) sites.push_back(v);
  Region r = of(std::move(sites));
  r.kind_ = Kind::ball;
  r.center_ = center;
  r.radius_ = radius;
  return r;
}

Region Region::all(const Lattice& lattice) {
  std::vector<int> sites(lattice.site_count());
  std::iota(sites.begin(), sites.end(), 0);
  return of(std::move(sites));
}

bool Region::contains(int site) const {
  return std::binary_search(sites_.begin(), sites_.end(), site);
}

bool Region::contains_all(std::span<const int> sites) const {
  return std::all_of(sites.begin(), sites.end(), [&](int s) { return contains(s); });
}

bool Region::intersects(std::span<const int> sites) const {
  return std::any_of(sites.begin(), sites.end(), [&](int s) { return contains(s); });
}

Region enlarge(const Lattice& lattice, const Region& region, int r) {
  if (r < 0) throw std::invalid_argument("enlargement radius must be non-negative");
  if (r == 0) return region;
  std::vector<int> sites;
  for (int v = 0; v < lattice.site_count(); ++v) {
    for (int u : region.sites()) {
      if (lattice.distance(u, v) <= r) {
        sites.push_back(v);
        break;
      }
    }
  }
  return Region::of(std::move(sites));
}

std::vector<int> inner_boundary(const Lattice& lattice, const Region& region) {
  std::vector<int> out;
  for (int u : region.sites()) {
    for (int v : lattice.neighbours(u)) {
      if (!region.contains(v)) {
        out.push_back(u);
        break;
      }
    }
  }
  return out;
}

int diameter_of(const Lattice& lattice, std::span<const int> sites) {
  int d = 0;
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = i + 1; j < sites.size(); ++j)
      d = std::max(d, lattice.distance(sites[i], sites[j]));
  return d;
}

LocalObservable::LocalObservable(std::vector<int> sup, CMatrix m, std::string lbl, int local_dim)
    : support(std::move(sup)), matrix(std::move(m)), label(std::move(lbl)) {
  if (!std::is_sorted(support.begin(), support.end()) ||
      std::adjacent_find(support.begin(), support.end()) != support.end())
    throw std::invalid_argument("observable support must be sorted and distinct");
  const auto side = ipow(local_dim, static_cast<int>(support.size()));
  if (matrix.rows() != side || matrix.cols() != side)
    throw std::invalid_argument("observable matrix does not match its support");
  if (!is_hermitian(matrix, 1e-12)) throw std::invalid_argument("observable must be Hermitian");
}

LocalObservable parse_pauli_observable(std::string_view label, const Lattice& lattice) {
  std::vector<std::pair<int, char>> factors;
  std::size_t pos = 0;
  while (pos < label.size()) {
    while (pos < label.size() && (label[pos] == '*' || std::isspace(static_cast<unsigned char>(label[pos]))))
      ++pos;
    if (pos >= label.size()) break;
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(label[pos])));
    if (letter != 'I' && letter != 'X' && letter != 'Y' && letter != 'Z')
      throw std::invalid_argument("bad observable label '" + std::string(label) + "'");
    ++pos;
    std::size_t end = pos;
    while (end < label.size() && std::isdigit(static_cast<unsigned char>(label[end]))) ++end;
    if (end == pos) throw std::invalid_argument("missing site index in '" + std::string(label) + "'");
    const int site = std::stoi(std::string(label.substr(pos, end - pos)));
    if (site < 0 || site >= lattice.system_sites())
      throw std::out_of_range("observable site outside lattice in '" + std::string(label) + "'");
    factors.emplace_back(site, letter);
    pos = end;
  }
  if (factors.empty()) throw std::invalid_argument("empty observable label");
  std::sort(factors.begin(), factors.end());
  for (std::size_t i = 1; i < factors.size(); ++i)
    if (factors[i].first == factors[i - 1].first)
      throw std::invalid_argument("repeated site in '" + std::string(label) + "'");
  std::vector<int> support;
  CMatrix m = CMatrix::Identity(1, 1);
  for (auto [site, letter] : factors) {
    support.push_back(site);
    m = kron(m, pauli::by_letter(letter));
  }
  return LocalObservable(std::move(support), std::move(m), std::string(label), lattice.local_dim());
}

namespace {

// Calls fn(full_row, full_col, local_row, local_col) for every entry of
// local (x) identity-on-the-rest, in the lattice's site ordering.
template <typename Fn>
void for_each_embedded(std::span<const int> support, const Lattice& lattice, Fn&& fn) {
  const int n = lattice.site_count();
  const int d = lattice.local_dim();
  const int k = static_cast<int>(support.size());
  std::vector<std::int64_t> stride(n);
  for (int s = 0; s < n; ++s) stride[s] = ipow(d, n - 1 - s);
  std::vector<int> rest;
  for (int s = 0; s < n; ++s)
    if (std::find(support.begin(), support.end(), s) == support.end()) rest.push_back(s);
  const std::int64_t local_dim = ipow(d, k);
  const std::int64_t rest_dim = ipow(d, n - k);
  std::vector<std::int64_t> local_offset(local_dim, 0);
  for (std::int64_t a = 0; a < local_dim; ++a) {
    std::int64_t rem = a;
    for (int i = k - 1; i >= 0; --i) {
      local_offset[a] += (rem % d) * stride[support[i]];
      rem /= d;
    }
  }
  for (std::int64_t r = 0; r < rest_dim; ++r) {
    std::int64_t base = 0, rem = r;
    for (int i = static_cast<int>(rest.size()) - 1; i >= 0; --i) {
      base += (rem % d) * stride[rest[i]];
      rem /= d;
    }
    for (std::int64_t a = 0; a < local_dim; ++a)
      for (std::int64_t b = 0; b < local_dim; ++b)
        fn(base + local_offset[a], base + local_offset[b], a, b);
  }
}

void check_support(std::span<const int> support, const Lattice& lattice, const CMatrix& local) {
  for (int s : support)
    if (s < 0 || s >= lattice.site_count()) throw std::out_of_range("support outside lattice");
  const auto side = ipow(lattice.local_dim(), static_cast<int>(support.size()));
  if (local.rows() != side || local.cols() != side)
    throw std::invalid_argument("local matrix does not match its support");
}

}  // namespace

CMatrix embed(const LocalObservable& op, const Lattice& lattice) {
  if (lattice.site_count() > kDenseSiteCap)
    throw std::length_error("dense embedding limited to " + std::to_string(kDenseSiteCap) + " sites");
  check_support(op.support, lattice, op.matrix);
  const auto dim = lattice.hilbert_dim();
  CMatrix out = CMatrix::Zero(dim, dim);
  for_each_embedded(op.support, lattice, [&](std::int64_t i, std::int64_t j, std::int64_t a, std::int64_t b) {
    out(i, j) = op.matrix(a, b);
  });
  return out;
}

SparseCMatrix embed_sparse(const CMatrix& local, std::span<const int> support,
                           const Lattice& lattice) {
  check_support(support, lattice, local);
  std::vector<int> sorted(support.begin(), support.end());
  if (!std::is_sorted(sorted.begin(), sorted.end()))
    throw std::invalid_argument("support must be sorted");
  std::vector<Triplet> entries;
  for_each_embedded(sorted, lattice, [&](std::int64_t i, std::int64_t j, std::int64_t a, std::int64_t b) {
    const cd v = local(a, b);
    if (v != cd(0.0)) entries.emplace_back(i, j, v);
  });
  const auto dim = lattice.hilbert_dim();
  SparseCMatrix out(dim, dim);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

std::shared_ptr<const ParamLayout> ParamLayout::build(std::vector<std::vector<int>> supports,
                                                      std::vector<int> param_counts) {
  if (supports.size() != param_counts.size())
    throw std::invalid_argument("layout: supports and parameter counts differ in length");
  auto layout = std::make_shared<ParamLayout>();
  int offset = 0;
  for (std::size_t t = 0; t < supports.size(); ++t) {
    std::sort(supports[t].begin(), supports[t].end());
    layout->term_offsets.push_back(offset);
    for (int k = 0; k < param_counts[t]; ++k)
      layout->coordinates.emplace_back(static_cast<int>(t), k);
    offset += param_counts[t];
  }
  layout->term_supports = std::move(supports);
  layout->term_param_counts = std::move(param_counts);
  return layout;
}

std::vector<int> restricted_coordinates(const ParamLayout& layout, std::span<const int> sites) {
  const Region region = Region::of({sites.begin(), sites.end()});
  std::vector<int> out;
  for (int c = 0; c < layout.parameter_count(); ++c)
    if (region.intersects(layout.term_supports[layout.coordinates[c].first])) out.push_back(c);
  return out;
}

ParamVector::ParamVector(std::shared_ptr<const ParamLayout> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (!layout_) throw std::invalid_argument("parameter vector needs a layout");
  if (static_cast<int>(values_.size()) != layout_->parameter_count())
    throw std::invalid_argument("parameter vector has " + std::to_string(values_.size()) +
                                " entries, family expects " +
                                std::to_string(layout_->parameter_count()));
  for (double v : values_)
    if (!(v >= -1.0 && v <= 1.0)) throw std::out_of_range("parameter outside [-1, 1]");
}

std::span<const double> ParamVector::term_params(int term) const {
  return std::span<const double>(values_).subspan(layout_->term_offsets[term],
                                                  layout_->term_param_counts[term]);
}

ParamSlice restrict(const ParamVector& x, const Region& region) {
  if (x.layout()->parameter_count() == 0 && x.layout()->term_count() == 0)
    throw std::invalid_argument("restriction needs a populated coordinate map");
  ParamSlice out;
  out.coordinates = restricted_coordinates(*x.layout(), region.sites());
  for (int c : out.coordinates) out.values.push_back(x[c]);
  return out;
}

ParamSlice restrict(const ParamSlice& slice, const ParamLayout& layout, const Region& region) {
  ParamSlice out;
  for (std::size_t i = 0; i < slice.coordinates.size(); ++i) {
    const int c = slice.coordinates[i];
    if (region.intersects(layout.term_supports[layout.coordinates[c].first])) {
      out.coordinates.push_back(c);
      out.values.push_back(slice.values[i]);
    }
  }
  return out;
}

}  // namespace phaselearn
