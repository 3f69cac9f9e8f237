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

#include "phaselearn/shadows.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "phaselearn/errors.hpp"

namespace phaselearn {

namespace {

constexpr char kBases[3] = {'X', 'Y', 'Z'};

// Rows are <b+| and <b-| of the measured basis.
CMatrix basis_rows(char basis) {
  const double r = 1.0 / std::sqrt(2.0);
  CMatrix u(2, 2);
  switch (basis) {
    case 'Z':
      u << 1, 0, 0, 1;
      break;
    case 'X':
      u << r, r, r, -r;
      break;
    case 'Y':
      u << cd(r), cd(0, -r), cd(r), cd(0, r);
      break;
    default:
      throw std::invalid_argument(std::string("unknown measurement basis ") + basis);
  }
  return u;
}

char pick(double p_plus, Rng& rng) {
  if (p_plus < -1e-10 || p_plus > 1.0 + 1e-10 || !std::isfinite(p_plus))
    throw NumericalError("invalid Born probability " + std::to_string(p_plus));
  return rng.uniform() < p_plus ? '0' : '1';
}

}  // namespace

CMatrix basis_projector(char basis, char outcome) {
  const CMatrix u = basis_rows(basis);
  const int a = outcome == '0' ? 0 : 1;
  if (outcome != '0' && outcome != '1') throw std::invalid_argument("outcome must be '0' or '1'");
  const CVector ket = u.row(a).adjoint();
  return ket * ket.adjoint();
}

std::string sample_outcomes(const PhaseState& state, const std::string& bases, Rng& rng) {
  const Lattice& lat = state.lattice();
  const int n = lat.system_sites();
  if (static_cast<int>(bases.size()) != n) throw std::invalid_argument("one basis per system site");
  if (lat.local_dim() != 2) throw std::invalid_argument("shadows need qubit sites");
  std::string out(static_cast<std::size_t>(n), '0');

  if (state.is_product()) {
    for (int s = 0; s < n; ++s) {
      const CMatrix u = basis_rows(bases[static_cast<std::size_t>(s)]);
      const CMatrix& rho = state.sites()[static_cast<std::size_t>(s)];
      const double p = (u.row(0) * rho * u.row(0).adjoint())(0, 0).real() / rho.trace().real();
      out[static_cast<std::size_t>(s)] = pick(p, rng);
    }
    return out;
  }

  CMatrix cur;
  if (lat.site_count() == n) {
    cur = state.dense().data();
  } else {
    std::vector<int> keep(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) keep[static_cast<std::size_t>(s)] = s;
    cur = state.dense().reduced(keep);
  }
  // Site s is the most significant digit of what is left: its value splits
  // the remaining matrix into 2x2 blocks.
  for (int s = 0; s < n; ++s) {
    const CMatrix u = basis_rows(bases[static_cast<std::size_t>(s)]);
    const Eigen::Index h = cur.rows() / 2;
    const auto a00 = cur.topLeftCorner(h, h);
    const auto a01 = cur.topRightCorner(h, h);
    const auto a10 = cur.bottomLeftCorner(h, h);
    const auto a11 = cur.bottomRightCorner(h, h);
    auto weight = [&](int a, int c, int d) { return u(a, c) * std::conj(u(a, d)); };
    const double total = cur.trace().real();
    const cd t00 = a00.trace(), t01 = a01.trace(), t10 = a10.trace(), t11 = a11.trace();
    const double p = (weight(0, 0, 0) * t00 + weight(0, 0, 1) * t01 + weight(0, 1, 0) * t10 +
                      weight(0, 1, 1) * t11).real() / total;
    const char o = pick(p, rng);
    out[static_cast<std::size_t>(s)] = o;
    const int a = o == '0' ? 0 : 1;
    CMatrix next = weight(a, 0, 0) * a00 + weight(a, 0, 1) * a01 + weight(a, 1, 0) * a10 +
                   weight(a, 1, 1) * a11;
    const double tr = next.trace().real();
    if (!(tr > 0.0)) throw NumericalError("conditional state has non-positive trace");
    cur = next / tr;
  }
  return out;
}

void measure_snapshot(const PhaseState& state, Rng& rng, ShadowSnapshot& out) {
  const int n = state.lattice().system_sites();
  out.bases.assign(static_cast<std::size_t>(n), 'Z');
  for (auto& b : out.bases) b = kBases[rng.below(3)];
  out.outcomes = sample_outcomes(state, out.bases, rng);
}

ShadowSnapshot measure_snapshot(const PhaseState& state, Rng& rng) {
  ShadowSnapshot s;
  measure_snapshot(state, rng, s);
  return s;
}

CMatrix snapshot_local_matrix(const ShadowSnapshot& s, std::span<const int> region, int max_sites) {
  if (static_cast<int>(region.size()) > max_sites)
    throw std::invalid_argument("region too large for a local shadow estimate");
  CMatrix acc = CMatrix::Ones(1, 1);
  const CMatrix id = CMatrix::Identity(2, 2);
  for (int site : region) {
    if (site < 0 || site >= static_cast<int>(s.bases.size()))
      throw std::invalid_argument("region site outside the measured system");
    const auto i = static_cast<std::size_t>(site);
    acc = kron(acc, 3.0 * basis_projector(s.bases[i], s.outcomes[i]) - id);
  }
  return acc;
}

double snapshot_value(const ShadowSnapshot& s, const LocalObservable& op) {
  return (op.matrix * snapshot_local_matrix(s, op.support, 16)).trace().real();
}

LocalEstimate aggregate(std::span<const ShadowSnapshot> snapshots,
                        std::span<const std::int64_t> indices, std::span<const int> region) {
  if (indices.empty()) throw NoMatchingSamples("no snapshots in the selected cell");
  const auto dim = static_cast<Eigen::Index>(ipow(2, static_cast<int>(region.size())));
  LocalEstimate est;
  est.region.assign(region.begin(), region.end());
  est.matrix = CMatrix::Zero(dim, dim);
  for (std::int64_t i : indices)
    est.matrix += snapshot_local_matrix(snapshots[static_cast<std::size_t>(i)], region);
  est.count = static_cast<std::int64_t>(indices.size());
  est.matrix /= static_cast<double>(est.count);
  est.source = "aggregate";
  return est;
}

LocalEstimate aggregate(std::span<const ShadowSnapshot> snapshots, std::span<const int> region) {
  std::vector<std::int64_t> all(snapshots.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::int64_t>(i);
  return aggregate(snapshots, all, region);
}

double median_of_means(std::span<const double> values, int batches) {
  if (batches < 1) throw std::invalid_argument("median_of_means: need at least one batch");
  if (values.size() < static_cast<std::size_t>(batches))
    throw std::invalid_argument("median_of_means: more batches than values");
  const std::size_t size = values.size() / static_cast<std::size_t>(batches);
  std::vector<double> means(static_cast<std::size_t>(batches));
  for (std::size_t b = 0; b < means.size(); ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < size; ++i) acc += values[b * size + i];
    means[b] = acc / static_cast<double>(size);
  }
  std::sort(means.begin(), means.end());
  const std::size_t mid = means.size() / 2;
  return means.size() % 2 ? means[mid] : 0.5 * (means[mid - 1] + means[mid]);
}

int default_batches(std::int64_t count, double delta_prime) {
  if (!(delta_prime > 0.0 && delta_prime < 1.0))
    throw std::invalid_argument("delta' must lie in (0,1)");
  const auto k = static_cast<std::int64_t>(std::ceil(8.0 * std::log(2.0 / delta_prime)));
  return static_cast<int>(std::max<std::int64_t>(1, std::min(k, count / 2)));
}

std::int64_t required_shadow_count(double eps, double delta_prime, int k0, int n) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
  if (!(delta_prime > 0.0 && delta_prime < 1.0))
    throw std::invalid_argument("delta' must lie in (0,1)");
  if (k0 < 0 || n < 1) throw std::invalid_argument("invalid locality or system size");
  const double pre = 8.0 * std::pow(12.0, k0) / (3.0 * eps * eps);
  const double arg = std::pow(static_cast<double>(n), k0) * std::pow(2.0, k0 + 1) / delta_prime;
  return static_cast<std::int64_t>(std::ceil(pre * std::log(arg)));
}

// ---------------------------------------------------------------------------

std::string encode_params(std::span<const double> x) {
  if (x.empty()) return "-";
  std::string out;
  out.reserve(16 * x.size());
  char buf[17];
  for (double v : x) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    std::snprintf(buf, sizeof buf, "%016" PRIx64, bits);
    out += buf;
  }
  return out;
}

std::vector<double> decode_params(const std::string& hex) {
  if (hex == "-") return {};
  if (hex.size() % 16 != 0) throw std::invalid_argument("malformed parameter encoding");
  std::vector<double> out(hex.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint64_t bits = std::stoull(hex.substr(16 * i, 16), nullptr, 16);
    std::memcpy(&out[i], &bits, sizeof bits);
  }
  return out;
}

void write_snapshots(std::ostream& os, std::span<const ShadowSnapshot> snapshots,
                     const std::vector<std::string>& header) {
  os << "# phaselearn snapshots v1\n";
  for (const auto& h : header) os << "# " << h << '\n';
  os << "# x_hex tau omega bases outcomes seed\n";
  char tau[32];
  for (const auto& s : snapshots) {
    if (std::isinf(s.tau))
      std::snprintf(tau, sizeof tau, "inf");
    else
      std::snprintf(tau, sizeof tau, "%.17g", s.tau);
    os << encode_params(s.x) << ' ' << tau << ' ' << s.omega << ' ' << s.bases << ' '
       << s.outcomes << ' ' << s.seed << '\n';
  }
}

std::vector<ShadowSnapshot> read_snapshots(std::istream& is) {
  std::vector<ShadowSnapshot> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string xhex, tau;
    ShadowSnapshot s;
    if (!(ls >> xhex >> tau >> s.omega >> s.bases >> s.outcomes >> s.seed))
      throw std::invalid_argument("malformed snapshot record on line " + std::to_string(lineno));
    s.x = decode_params(xhex);
    s.tau = tau == "inf" ? kSteadyTime : std::stod(tau);
    if (s.bases.size() != s.outcomes.size())
      throw std::invalid_argument("basis and outcome lengths differ on line " + std::to_string(lineno));
    for (char b : s.bases)
      if (b != 'X' && b != 'Y' && b != 'Z')
        throw std::invalid_argument("bad basis letter on line " + std::to_string(lineno));
    for (char o : s.outcomes)
      if (o != '0' && o != '1')
        throw std::invalid_argument("bad outcome on line " + std::to_string(lineno));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace phaselearn
