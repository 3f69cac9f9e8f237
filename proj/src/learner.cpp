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

#include "phaselearn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "phaselearn/errors.hpp"
#include "phaselearn/parallel.hpp"
#include "phaselearn/rng.hpp"

namespace phaselearn {

namespace {

nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double read_number(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("expected a number, got \"" + s + "\"");
  }
  return j.get<double>();
}

bool in_unit_interval(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::steady:
      return "steady";
    case Mode::general:
      return "general";
    case Mode::slow:
      return "slow";
  }
  return "steady";
}

Mode mode_from_string(const std::string& s) {
  if (s == "steady") return Mode::steady;
  if (s == "general") return Mode::general;
  if (s == "slow") return Mode::slow;
  throw ConfigError("unknown mode " + s + " (expected steady, general or slow)");
}

double PlanConstants::xi() const { return 1.0 / std::min(gamma_prime, mu / 2.0); }

double PlanConstants::f_of_n() const { return f_coeff * std::pow(static_cast<double>(n), f_power); }

int PlanConstants::ball_volume() const {
  // Lattice points with l1 norm <= k0 in D dimensions.
  auto binom = [](int a, int b) {
    if (b < 0 || b > a) return 0LL;
    long long r = 1;
    for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
  };
  long long total = 0;
  for (int i = 0; i <= D; ++i) total += (1LL << i) * binom(D, i) * binom(k0, i);
  return static_cast<int>(total);
}

nlohmann::json PlanConstants::to_json() const {
  return {{"gamma_prime", number(gamma_prime)}, {"mu", number(mu)}, {"J", J},
          {"ell", ell}, {"k0", k0}, {"r0", r0}, {"D", D}, {"c_prime", c_prime},
          {"kappa", kappa}, {"n", n}, {"M", M}, {"W", W}, {"f_coeff", f_coeff},
          {"f_power", f_power}, {"xi", xi()}, {"A", ball_volume()}};
}

PlanConstants PlanConstants::from_json(const nlohmann::json& j) {
  PlanConstants c;
  c.gamma_prime = read_number(j.at("gamma_prime"));
  c.mu = read_number(j.at("mu"));
  c.J = j.at("J").get<double>();
  c.ell = j.at("ell").get<int>();
  c.k0 = j.at("k0").get<int>();
  c.r0 = j.at("r0").get<int>();
  c.D = j.at("D").get<int>();
  c.c_prime = j.at("c_prime").get<double>();
  c.kappa = j.at("kappa").get<double>();
  c.n = j.at("n").get<int>();
  c.M = j.at("M").get<int>();
  c.W = j.at("W").get<int>();
  c.f_coeff = j.at("f_coeff").get<double>();
  c.f_power = j.at("f_power").get<double>();
  return c;
}

nlohmann::json LearnerPlan::to_json() const {
  return {{"mode", to_string(mode)},
          {"eps", eps},
          {"delta", delta},
          {"delta_prime", delta_prime},
          {"constants", constants.to_json()},
          {"r", r},
          {"gamma", gamma},
          {"q", q},
          {"t_eps", number(t_eps)},
          {"m_r", m_r},
          {"log2_N", log2_N},
          {"N", N}};
}

LearnerPlan LearnerPlan::from_json(const nlohmann::json& j) {
  LearnerPlan p;
  p.mode = mode_from_string(j.at("mode").get<std::string>());
  p.eps = j.at("eps").get<double>();
  p.delta = j.at("delta").get<double>();
  p.delta_prime = j.at("delta_prime").get<double>();
  p.constants = PlanConstants::from_json(j.at("constants"));
  p.r = j.at("r").get<int>();
  p.gamma = j.at("gamma").get<double>();
  p.q = j.at("q").get<std::int64_t>();
  p.t_eps = read_number(j.at("t_eps"));
  p.m_r = j.at("m_r").get<int>();
  p.log2_N = j.at("log2_N").get<double>();
  p.N = j.at("N").get<std::int64_t>();
  return p;
}

LearnerPlan plan(double eps, double delta, double delta_prime, const PlanConstants& c, Mode mode) {
  if (!in_unit_interval(eps) || !in_unit_interval(delta) || !in_unit_interval(delta_prime))
    throw ConfigError("eps, delta and delta' must lie in (0,1)");
  if (!(c.gamma_prime > 0.0) || !(c.mu > 0.0) || !(c.J > 0.0) || !(c.c_prime > 0.0))
    throw ConfigError("plan constants gamma', mu, J and c' must be positive");
  if (c.ell < 1 || c.k0 < 0 || c.r0 < 0 || c.D < 1 || c.D > 2 || c.n < 1 || c.M < 1 || c.W < 1)
    throw ConfigError("plan constants out of range");
  if (mode == Mode::slow && !(c.f_of_n() > 0.0)) throw ConfigError("f(n) must be positive");

  LearnerPlan p;
  p.eps = eps;
  p.delta = delta;
  p.delta_prime = delta_prime;
  p.mode = mode;
  p.constants = c;

  const double xi = c.xi();
  const double D = c.D;
  const double A = c.ball_volume();
  const double slow_factor = mode == Mode::slow ? c.f_of_n() : 1.0;
  const double arg = 4.0 * c.c_prime * A * c.J * std::tgamma(D) * std::pow(2.0 * xi, D - 1.0) *
                     std::pow(D, D - 1.0) * slow_factor /
                     (eps * std::exp(1.0 / (2.0 * xi)) * (1.0 - std::exp(-1.0 / (2.0 * xi))));
  const double r_real = std::ceil(2.0 * xi * std::log(arg));
  if (!(r_real < 1e6)) throw PlanInfeasible("patch radius diverges", std::numeric_limits<double>::infinity());
  p.r = std::max(0, static_cast<int>(r_real));

  const double side = std::pow(2.0 * (p.r + c.k0), D);
  if (mode == Mode::slow)
    p.gamma = eps / (3.0 * side * c.J * (c.ell + 1));
  else
    p.gamma = eps / (2.0 * side * c.J * c.ell);

  if (mode == Mode::general)
    p.t_eps = std::log(6.0 * c.c_prime * std::pow(A, c.kappa) / eps) / c.gamma_prime;
  else if (mode == Mode::slow)
    p.t_eps = std::log(3.0 * c.f_of_n() / eps) / c.gamma_prime;
  if (!(p.t_eps > 0.0))
    throw PlanInfeasible("time horizon t_eps is not positive", std::numeric_limits<double>::quiet_NaN());

  p.q = required_shadow_count(eps, delta_prime, c.k0, c.n);
  p.m_r = static_cast<int>(ipow(2 * (p.r + c.r0 + c.k0), c.D)) * c.ell;

  const double m = p.m_r;
  const double log_cells = m * std::log(2.0 / p.gamma);
  const double log_q = std::log(static_cast<double>(p.q));
  double bracket, log_n;
  if (mode == Mode::steady) {
    bracket = std::log(c.M / delta) + log_cells + log_q;
    log_n = log_q + log_cells + std::log(bracket);
  } else {
    const double ratio = p.t_eps / p.gamma;
    bracket = std::log(c.M / delta) + log_cells + std::log(ratio) + log_q;
    log_n = std::log(static_cast<double>(c.W)) + log_q + std::log(ratio) + log_cells + std::log(bracket);
  }
  p.log2_N = log_n / std::log(2.0);
  if (!(p.log2_N < 63.0))
    throw PlanInfeasible("planned sample count 2^" + std::to_string(p.log2_N) +
                             " exceeds the 2^63 guard",
                         p.log2_N);
  // Extended precision keeps the ceiling exact up to the 2^63 guard.
  const long double cells = std::pow(2.0L / p.gamma, static_cast<long double>(m));
  long double n_real;
  if (mode == Mode::steady)
    n_real = static_cast<long double>(p.q) * cells * bracket;
  else
    n_real = static_cast<long double>(c.W) * p.q * (p.t_eps / p.gamma) * cells * bracket;
  p.N = static_cast<std::int64_t>(std::ceil(n_real));
  return p;
}

// ---------------------------------------------------------------------------

double patch_distance(std::span<const double> x, double t, const ShadowSnapshot& s,
                      std::span<const int> coords, bool use_time) {
  double d = 0.0;
  for (int c : coords) {
    const auto i = static_cast<std::size_t>(c);
    d = std::max(d, std::abs(x[i] - s.x[i]));
  }
  if (use_time) d = std::max(d, std::abs(t - s.tau));
  return d;
}

PatchMatch nearest_patch(std::span<const double> x, double t, int omega,
                         std::span<const ShadowSnapshot> training, std::span<const int> coords,
                         bool use_time) {
  PatchMatch best;
  for (std::size_t k = 0; k < training.size(); ++k) {
    if (training[k].omega != omega) continue;
    const double d = patch_distance(x, t, training[k], coords, use_time);
    if (d < best.distance) {
      best.distance = d;
      best.index = static_cast<std::int64_t>(k);
    }
  }
  return best;
}

std::vector<std::int64_t> select_cell(std::span<const double> x, double t, int omega,
                                      std::span<const ShadowSnapshot> training,
                                      std::span<const int> coords, double gamma, bool use_time) {
  if (!(gamma > 0.0)) throw std::invalid_argument("select_cell: gamma must be positive");
  std::vector<std::int64_t> out;
  for (std::size_t k = 0; k < training.size(); ++k)
    if (training[k].omega == omega && patch_distance(x, t, training[k], coords, use_time) <= gamma)
      out.push_back(static_cast<std::int64_t>(k));
  return out;
}

std::vector<int> patch_coordinates(const LocalObservable& op, int r, const Lattice& lattice,
                                   const ParamLayout& layout) {
  const Region patch = enlarge(lattice, Region::of(op.support), r);
  return restricted_coordinates(layout, patch.sites());
}

nlohmann::json Prediction::to_json() const {
  nlohmann::json distances = nlohmann::json::array();
  for (double d : patch_distances) distances.push_back(number(d));
  return {{"value", value}, {"per_term", per_term}, {"counts", counts},
          {"patch_distances", distances}, {"warnings", warnings}};
}

Prediction predict(const std::vector<LocalObservable>& observables, std::span<const double> x,
                   double t, int omega, std::span<const ShadowSnapshot> training,
                   const LearnerPlan& plan, const Lattice& lattice, const ParamLayout& layout,
                   const PredictOptions& opt) {
  if (training.empty()) throw NoMatchingSamples("training set is empty");
  if (static_cast<int>(x.size()) != layout.parameter_count())
    throw std::invalid_argument("predict: parameter vector has the wrong length");
  const bool use_time = plan.mode != Mode::steady;
  const std::size_t terms = observables.size();
  Prediction out;
  out.per_term.assign(terms, 0.0);
  out.counts.assign(terms, 0);
  out.patch_distances.assign(terms, 0.0);
  std::vector<std::string> warn(terms);

  parallel_for(terms, opt.workers, [&](std::size_t i) {
    const auto& op = observables[i];
    const auto coords = patch_coordinates(op, plan.r, lattice, layout);
    auto cell = select_cell(x, t, omega, training, coords, plan.gamma, use_time);
    double dist = plan.gamma;
    if (cell.empty()) {
      const auto m = nearest_patch(x, t, omega, training, coords, use_time);
      if (m.index < 0) throw NoMatchingSamples("no training sample with ancilla choice " + std::to_string(omega));
      cell.push_back(m.index);
      dist = m.distance;
      warn[i] = "empty cell for " + op.label + "; used nearest patch at distance " + std::to_string(m.distance);
    }
    std::vector<double> values;
    values.reserve(cell.size());
    for (std::int64_t k : cell) values.push_back(snapshot_value(training[static_cast<std::size_t>(k)], op));
    const auto count = static_cast<std::int64_t>(values.size());
    const int batches = opt.mom_batches > 0
                            ? static_cast<int>(std::min<std::int64_t>(opt.mom_batches, count))
                            : default_batches(count, plan.delta_prime);
    out.per_term[i] = median_of_means(values, batches);
    out.counts[i] = count;
    out.patch_distances[i] = dist;
  });
  for (std::size_t i = 0; i < terms; ++i) {
    out.value += out.per_term[i];
    if (!warn[i].empty()) out.warnings.push_back(warn[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

double coverage_failure_bound(std::int64_t N, double gamma, int dims, int M) {
  return M * std::exp(-static_cast<double>(N) * std::pow(gamma / 2.0, dims) +
                      dims * std::log(2.0 / gamma));
}

double coverage_failure_bound_q(std::int64_t N, double gamma, int dims, int M, std::int64_t q) {
  const double qd = static_cast<double>(q);
  return M * std::exp(-static_cast<double>(N) * std::pow(gamma / 2.0, dims) / qd +
                      dims * std::log(2.0 / gamma) + std::log(qd));
}

nlohmann::json CoverageReport::to_json() const {
  nlohmann::json regs = nlohmann::json::array();
  for (const auto& r : regions)
    regs.push_back({{"coordinates", r.coordinates}, {"dims", r.dims}, {"cells", r.cells},
                    {"cells_examined", r.cells_examined}, {"covered_any", r.covered_any},
                    {"covered_q", r.covered_q}, {"failure_bound", r.failure_bound},
                    {"failure_bound_q", r.failure_bound_q}});
  return {{"N", N}, {"gamma", gamma}, {"q", q}, {"regions", regs},
          {"worst_failure_bound", worst_failure_bound},
          {"worst_failure_bound_q", worst_failure_bound_q},
          {"min_covered_any", min_covered_any}, {"min_covered_q", min_covered_q}};
}

CoverageReport coverage_report(std::span<const ShadowSnapshot> training, double gamma, std::int64_t q,
                               const std::vector<std::vector<int>>& regions, bool use_time,
                               double t_eps, int M, std::uint64_t seed) {
  if (!(gamma > 0.0)) throw std::invalid_argument("coverage_report: gamma must be positive");
  CoverageReport rep;
  rep.N = static_cast<std::int64_t>(training.size());
  rep.gamma = gamma;
  rep.q = q;
  const int per_axis = static_cast<int>(std::ceil(2.0 / gamma - 1e-12));
  const int time_cells = use_time ? std::max(1, static_cast<int>(std::ceil(t_eps / gamma - 1e-12))) : 1;
  auto bin = [](double v, double lo, double width, int count) {
    return std::clamp(static_cast<int>(std::floor((v - lo) / width)), 0, count - 1);
  };

  for (std::size_t ri = 0; ri < regions.size(); ++ri) {
    const auto& coords = regions[ri];
    CoverageRegion cr;
    cr.coordinates = coords;
    cr.dims = static_cast<int>(coords.size()) + (use_time ? 1 : 0);
    cr.cells = std::pow(static_cast<double>(per_axis), static_cast<double>(coords.size())) * time_cells;

    std::map<std::vector<int>, std::int64_t> occupancy;
    std::vector<int> key(static_cast<std::size_t>(cr.dims));
    for (const auto& s : training) {
      for (std::size_t a = 0; a < coords.size(); ++a)
        key[a] = bin(s.x[static_cast<std::size_t>(coords[a])], -1.0, gamma, per_axis);
      if (use_time) key.back() = bin(s.tau, 0.0, gamma, time_cells);
      ++occupancy[key];
    }

    if (cr.cells <= 1e6) {
      std::int64_t full = 0;
      for (const auto& [k, v] : occupancy)
        if (v >= q) ++full;
      cr.cells_examined = static_cast<std::int64_t>(cr.cells);
      cr.covered_any = static_cast<double>(occupancy.size()) / cr.cells;
      cr.covered_q = static_cast<double>(full) / cr.cells;
    } else {
      constexpr std::int64_t kProbes = 100000;
      Rng rng(derive_seed(seed, "coverage", ri));
      std::int64_t any = 0, full = 0;
      for (std::int64_t p = 0; p < kProbes; ++p) {
        for (std::size_t a = 0; a < coords.size(); ++a)
          key[a] = static_cast<int>(rng.below(static_cast<std::uint64_t>(per_axis)));
        if (use_time) key.back() = static_cast<int>(rng.below(static_cast<std::uint64_t>(time_cells)));
        auto it = occupancy.find(key);
        if (it != occupancy.end()) {
          ++any;
          if (it->second >= q) ++full;
        }
      }
      cr.cells_examined = kProbes;
      cr.covered_any = static_cast<double>(any) / kProbes;
      cr.covered_q = static_cast<double>(full) / kProbes;
    }
    cr.failure_bound = coverage_failure_bound(rep.N, gamma, cr.dims, M);
    cr.failure_bound_q = coverage_failure_bound_q(rep.N, gamma, cr.dims, M, q);
    rep.worst_failure_bound = std::max(rep.worst_failure_bound, cr.failure_bound);
    rep.worst_failure_bound_q = std::max(rep.worst_failure_bound_q, cr.failure_bound_q);
    rep.min_covered_any = std::min(rep.min_covered_any, cr.covered_any);
    rep.min_covered_q = std::min(rep.min_covered_q, cr.covered_q);
    rep.regions.push_back(std::move(cr));
  }
  return rep;
}

}  // namespace phaselearn
