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

#include "phaselearn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "phaselearn/errors.hpp"
#include "phaselearn/parallel.hpp"
#include "phaselearn/rng.hpp"

namespace phaselearn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  bool ok = false;
};

LineFit weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                      const std::vector<double>& w) {
  LineFit f;
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
  }
  if (!(sw > 0.0)) return f;
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    sxy += w[i] * (x[i] - mx) * (y[i] - my);
    syy += w[i] * (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  f.ok = true;
  return f;
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void check_scan_size(const ParamLindbladian& family) {
  if (family.lattice().site_count() > kScanSiteCap)
    throw std::invalid_argument("diagnostic scans are limited to " + std::to_string(kScanSiteCap) +
                                " sites");
}

// States e^{tL}(rho0) at every entry of `times` (any order; inf = steady state).
std::vector<CMatrix> evolve_grid(const Superoperator& L, const Lattice& lattice,
                                 const CMatrix& rho0, const std::vector<double>& times,
                                 const OdeOptions& ode) {
  std::vector<std::size_t> order(times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
  std::vector<CMatrix> out(times.size());
  CMatrix cur = rho0;
  double now = 0.0;
  std::optional<CMatrix> steady;
  for (std::size_t i : order) {
    const double t = times[i];
    if (!(t >= 0.0)) throw std::invalid_argument("times must be non-negative");
    if (std::isinf(t)) {
      if (!steady) steady = steady_state(L, lattice).data();
      out[i] = *steady;
      continue;
    }
    cur = evolve(L, cur, t - now, ode);
    now = t;
    out[i] = cur;
  }
  return out;
}

double local_expectation(const CMatrix& rho, const Lattice& lattice, const LocalObservable& op) {
  return (op.matrix * partial_trace(rho, lattice, op.support)).trace().real();
}

int term_ball_radius(const Lattice& lattice, const std::vector<int>& support) {
  int best = std::numeric_limits<int>::max();
  for (int u = 0; u < lattice.site_count(); ++u) {
    int far = 0;
    for (int s : support) far = std::max(far, lattice.distance(u, s));
    best = std::min(best, far);
  }
  return best;
}

int distance_between(const Lattice& lattice, const std::vector<int>& a, const std::vector<int>& b) {
  int best = std::numeric_limits<int>::max();
  for (int u : a)
    for (int v : b) best = std::min(best, lattice.distance(u, v));
  return best;
}

}  // namespace

std::vector<double> default_time_grid() { return {0.25, 0.5, 1.0, 2.0, 4.0}; }

// ---------------------------------------------------------------------------

DecayFit fit_decay(std::string label, std::vector<DecayPoint> points, const FitOptions& opt) {
  DecayFit fit;
  fit.abscissa_label = std::move(label);
  fit.points = std::move(points);

  std::vector<double> xs, ys, ws;
  for (const auto& p : fit.points) {
    if (p.excluded || !(p.value > kFitFloor)) continue;
    if (p.abscissa < opt.fit_from || p.abscissa > opt.fit_to) continue;
    xs.push_back(p.abscissa);
    ys.push_back(std::log(p.value));
    ws.push_back(p.value * p.value);
  }
  // Rescale the weights so that tiny values do not underflow the sums.
  const double wmax = ws.empty() ? 1.0 : *std::max_element(ws.begin(), ws.end());
  for (auto& w : ws) w /= wmax;
  fit.fitted_points = static_cast<int>(xs.size());

  const LineFit line = xs.size() >= 2 ? weighted_line(xs, ys, ws) : LineFit{};
  if (!line.ok) {
    // At most one distinct point above the floor: the curve has vanished.
    fit.rate = kInf;
    fit.prefactor = xs.empty() ? 0.0 : std::exp(ys.front());
    fit.r_squared = 1.0;
    fit.rate_ci_low = kInf;
    fit.rate_ci_high = kInf;
    fit.pass = true;
    return fit;
  }
  fit.rate = -line.slope;
  fit.prefactor = std::exp(line.intercept);
  fit.r_squared = line.r2;

  std::vector<double> rates;
  if (opt.bootstrap > 0) {
    Rng rng(derive_seed(opt.seed, "bootstrap"));
    std::vector<double> bx(xs.size()), by(xs.size()), bw(xs.size());
    for (int b = 0; b < opt.bootstrap; ++b) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto k = static_cast<std::size_t>(rng.below(xs.size()));
        bx[i] = xs[k];
        by[i] = ys[k];
        bw[i] = ws[k];
      }
      const LineFit f = weighted_line(bx, by, bw);
      if (f.ok) rates.push_back(-f.slope);
    }
  }
  if (rates.size() < 10) {
    fit.rate_ci_low = fit.rate;
    fit.rate_ci_high = fit.rate;
  } else {
    fit.rate_ci_low = percentile(rates, 0.025);
    fit.rate_ci_high = percentile(rates, 0.975);
  }
  fit.pass = fit.rate_ci_low > 0.0;
  return fit;
}

void attach_envelope(DecayFit& fit, std::vector<double> envelope, double tol) {
  if (envelope.size() != fit.points.size())
    throw std::invalid_argument("envelope length differs from the point count");
  fit.envelope = std::move(envelope);
  fit.has_envelope = true;
  fit.envelope_valid = true;
  for (std::size_t i = 0; i < fit.points.size(); ++i) {
    const double e = fit.envelope[i];
    if (std::isnan(e) || fit.points[i].excluded) continue;
    if (fit.points[i].value > e + tol) fit.envelope_valid = false;
  }
}

nlohmann::json DecayFit::to_json() const {
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    nlohmann::json p = {{"abscissa", number(points[i].abscissa)},
                        {"value", number(points[i].value)},
                        {"error", number(points[i].error)},
                        {"excluded", points[i].excluded}};
    if (!points[i].note.empty()) p["note"] = points[i].note;
    if (has_envelope) p["envelope"] = number(envelope[i]);
    pts.push_back(std::move(p));
  }
  return {{"abscissa", abscissa_label}, {"rate", number(rate)},
          {"prefactor", number(prefactor)}, {"r_squared", number(r_squared)},
          {"rate_ci", {number(rate_ci_low), number(rate_ci_high)}},
          {"fitted_points", fitted_points}, {"pass", pass},
          {"has_envelope", has_envelope}, {"envelope_valid", envelope_valid},
          {"points", pts}};
}

void DecayFit::write_csv(std::ostream& os) const {
  os << abscissa_label << ",value,error" << (has_envelope ? ",envelope" : "") << '\n';
  char buf[128];
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", points[i].abscissa, points[i].value,
                  points[i].error);
    os << buf;
    if (has_envelope) {
      std::snprintf(buf, sizeof buf, ",%.17g", envelope[i]);
      os << buf;
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------

double lieb_robinson_velocity(const ParamLindbladian& family, double mu) {
  const Lattice& lat = family.lattice();
  std::vector<double> load(static_cast<std::size_t>(lat.site_count()), 0.0);
  for (const auto& t : family.terms()) {
    const int r = term_ball_radius(lat, t.support());
    const double ball = std::pow(2.0 * r + 1.0, lat.dimension());
    for (int s : t.support()) load[static_cast<std::size_t>(s)] += t.strength() * ball * std::exp(mu * r);
  }
  return 2.0 * (load.empty() ? 0.0 : *std::max_element(load.begin(), load.end()));
}

DecayFit lieb_robinson_scan(const ParamLindbladian& family, const ParamVector& x,
                            const ParamVector& x_prime, const LocalObservable& op, double t,
                            int r_max, const ScanOptions& opt) {
  check_scan_size(family);
  if (!(t >= 0.0) || std::isinf(t)) throw std::invalid_argument("scan time must be finite and non-negative");
  if (r_max < 0) throw std::invalid_argument("r_max must be non-negative");
  const Lattice& lat = family.lattice();
  const CMatrix full_op = embed(op, lat);
  const CMatrix reference = heisenberg_evolve(assemble(family, x), full_op, t, opt.ode);

  std::vector<DecayPoint> points(static_cast<std::size_t>(r_max + 1));
  parallel_for(points.size(), opt.workers, [&](std::size_t r) {
    const Region patch = enlarge(lat, Region::of(op.support), static_cast<int>(r));
    const ParamVector local = localize(family, x, x_prime, patch);
    const CMatrix evolved = heisenberg_evolve(assemble(family, local), full_op, t, opt.ode);
    auto& p = points[r];
    p.abscissa = static_cast<double>(r);
    p.value = operator_norm(reference - evolved);
    p.error = 1e-9 * std::max(1.0, op.norm());
  });

  FitOptions fo = opt.fit;
  DecayFit fit = fit_decay("r", std::move(points), fo);
  const double v = lieb_robinson_velocity(family, opt.constants.mu);
  const double base = op.norm() * static_cast<double>(op.support.size()) * family.strength() *
                      (std::expm1(v * t) - v * t) / v;
  std::vector<double> env;
  for (const auto& p : fit.points) env.push_back(base * std::exp(-opt.constants.mu * p.abscissa));
  attach_envelope(fit, std::move(env));
  return fit;
}

DecayFit mixing_scan(const ParamLindbladian& family, const ParamVector& x, const CMatrix& rho0,
                     const LocalObservable& op, std::vector<double> t_grid, const ScanOptions& opt) {
  check_scan_size(family);
  if (t_grid.empty()) t_grid = default_time_grid();
  const Lattice& lat = family.lattice();
  const Superoperator L = assemble(family, x);
  const DensityMatrix steady = steady_state(L, lat);
  const double target = steady.expectation(op);
  const auto states = evolve_grid(L, lat, rho0, t_grid, opt.ode);
  std::vector<DecayPoint> points;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    DecayPoint p;
    p.abscissa = t_grid[i];
    p.value = std::abs(local_expectation(states[i], lat, op) - target);
    p.error = 1e-9 * std::max(1.0, op.norm());
    points.push_back(p);
  }
  DecayFit fit = fit_decay("t", std::move(points), opt.fit);
  std::vector<double> env;
  for (const auto& p : fit.points)
    env.push_back(opt.constants.poly_A * std::exp(-opt.constants.gamma_prime * p.abscissa));
  attach_envelope(fit, std::move(env), 1e-9);
  return fit;
}

DecayFit ltqo_scan(const ParamLindbladian& family, const ParamVector& x, const ParamVector& x_prime,
                   const LocalObservable& op, std::vector<int> s_grid, const ScanOptions& opt) {
  check_scan_size(family);
  const Lattice& lat = family.lattice();
  if (s_grid.empty())
    for (int s = 0; s <= lat.diameter(); ++s) s_grid.push_back(s);
  const double reference = steady_state(assemble(family, x), lat).expectation(op);

  std::vector<DecayPoint> points(s_grid.size());
  std::vector<double> region_sizes(s_grid.size());
  parallel_for(points.size(), opt.workers, [&](std::size_t i) {
    const Region patch = enlarge(lat, Region::of(op.support), s_grid[i]);
    region_sizes[i] = static_cast<double>(patch.size());
    auto& p = points[i];
    p.abscissa = s_grid[i];
    p.error = 1e-9 * std::max(1.0, op.norm());
    try {
      const ParamVector local = localize(family, x, x_prime, patch);
      p.value = std::abs(reference - steady_state(assemble(family, local), lat).expectation(op));
    } catch (const NonUniqueSteadyState& e) {
      p.excluded = true;
      p.value = std::numeric_limits<double>::quiet_NaN();
      p.note = e.what();
    }
  });

  DecayFit fit = fit_decay("s", std::move(points), opt.fit);
  const auto& c = opt.constants;
  const double v = lieb_robinson_velocity(family, c.mu);
  const double a = static_cast<double>(op.support.size());
  const double beta = c.mu * c.gamma_prime / (v + c.gamma_prime);
  const double kappa = 1.0;
  std::vector<double> env;
  for (std::size_t i = 0; i < fit.points.size(); ++i)
    env.push_back((family.strength() * a / v + c.poly_A) *
                  std::pow(region_sizes[i] / a, kappa * v / (v + c.gamma_prime)) *
                  std::exp(-beta * fit.points[i].abscissa));
  attach_envelope(fit, std::move(env), 1e-9);
  return fit;
}

void check_nesting(const Lattice& lattice, const Region& A, const Region& R, const Region& W) {
  if (!A.is_subset_of(R) || !R.is_subset_of(W))
    throw std::invalid_argument("regions must be nested: A inside R inside W");
  const auto dR = inner_boundary(lattice, R);
  const auto dW = inner_boundary(lattice, W);
  if (A.intersects(dR)) throw std::invalid_argument("region A touches the boundary of R");
  if (R.intersects(dW)) throw std::invalid_argument("region R touches the boundary of W");
}

DecayFit compatibility_scan(const ParamLindbladian& family, const ParamVector& x,
                            const ParamVector& x_prime, const Region& A, const Region& R,
                            const Region& W, std::vector<double> t_grid, const ScanOptions& opt) {
  check_scan_size(family);
  const Lattice& lat = family.lattice();
  check_nesting(lat, A, R, W);
  if (t_grid.empty()) t_grid = default_time_grid();
  const Superoperator LW = assemble(family, localize(family, x, x_prime, W));
  const Superoperator LR = assemble(family, localize(family, x, x_prime, R));
  const CMatrix rho_w = steady_state(LW, lat).data();
  const CMatrix target = steady_state(LR, lat).reduced(A.sites());
  const auto states = evolve_grid(LR, lat, rho_w, t_grid, opt.ode);
  std::vector<DecayPoint> points;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    DecayPoint p;
    p.abscissa = t_grid[i];
    p.value = trace_norm(partial_trace(states[i], lat, A.sites()) - target);
    p.error = 1e-9;
    points.push_back(p);
  }
  return fit_decay("t", std::move(points), opt.fit);
}

double perturbation_norm(const LocalGenerator& a, const LocalGenerator& b) {
  if (a.jumps.size() != b.jumps.size())
    throw std::invalid_argument("perturbation changes the number of jump operators");
  double s = 2.0 * operator_norm(a.hamiltonian - b.hamiltonian);
  for (std::size_t k = 0; k < a.jumps.size(); ++k)
    s += 2.0 * operator_norm(a.jumps[k] - b.jumps[k]) *
         (operator_norm(a.jumps[k]) + operator_norm(b.jumps[k]));
  return s;
}

DecayFit stability_scan(const ParamLindbladian& family, const ParamVector& x,
                        const LocalObservable& op, const CMatrix& rho_ref,
                        const StabilityOptions& stab, const ScanOptions& opt) {
  check_scan_size(family);
  if (stab.times.empty()) throw std::invalid_argument("stability scan needs evaluation times");
  const Lattice& lat = family.lattice();

  // Lowest-index parameterised term at each distance from supp(O).
  std::vector<int> chosen;
  std::vector<int> distances;
  {
    std::vector<int> by_distance(static_cast<std::size_t>(lat.diameter() + 1), -1);
    for (std::size_t j = 0; j < family.terms().size(); ++j) {
      const auto& term = family.terms()[j];
      if (term.param_count() == 0) continue;
      const int d = distance_between(lat, term.support(), op.support);
      if (by_distance[static_cast<std::size_t>(d)] < 0) by_distance[static_cast<std::size_t>(d)] = static_cast<int>(j);
    }
    for (std::size_t d = 0; d < by_distance.size(); ++d)
      if (by_distance[d] >= 0) {
        distances.push_back(static_cast<int>(d));
        chosen.push_back(by_distance[d]);
      }
  }

  const auto base_states = evolve_grid(assemble(family, x), lat, rho_ref, stab.times, opt.ode);
  std::vector<double> base(stab.times.size());
  for (std::size_t i = 0; i < base.size(); ++i) base[i] = local_expectation(base_states[i], lat, op);

  std::vector<DecayPoint> points(chosen.size());
  std::vector<double> enorm(chosen.size());
  parallel_for(chosen.size(), opt.workers, [&](std::size_t k) {
    const int term = chosen[k];
    const int coord = family.layout()->term_offsets[static_cast<std::size_t>(term)];
    std::vector<double> values = x.values();
    double shifted = values[static_cast<std::size_t>(coord)] + stab.shift;
    if (shifted > 1.0) shifted = values[static_cast<std::size_t>(coord)] - stab.shift;
    if (shifted < -1.0) throw std::invalid_argument("perturbation leaves the parameter box");
    values[static_cast<std::size_t>(coord)] = shifted;
    const ParamVector xp = family.params(values);
    enorm[k] = perturbation_norm(family.terms()[static_cast<std::size_t>(term)].generator(x.term_params(term)),
                                 family.terms()[static_cast<std::size_t>(term)].generator(xp.term_params(term)));
    const auto states = evolve_grid(assemble(family, xp), lat, rho_ref, stab.times, opt.ode);
    double worst = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i)
      worst = std::max(worst, std::abs(local_expectation(states[i], lat, op) - base[i]));
    points[k].abscissa = distances[k];
    points[k].value = worst;
    points[k].error = 1e-9 * std::max(1.0, op.norm());
  });

  DecayFit fit = fit_decay("d", std::move(points), opt.fit);
  const double mu = opt.constants.mu;
  const double v = lieb_robinson_velocity(family, mu);
  const double t = *std::max_element(stab.times.begin(), stab.times.end());
  const double a = static_cast<double>(op.support.size());
  std::vector<double> env;
  for (std::size_t k = 0; k < fit.points.size(); ++k) {
    const double d = fit.points[k].abscissa;
    const double t0 = 0.5 * mu * std::log(v * v / 2.0) / v * d;
    if (std::isinf(t) || t > t0) {
      env.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    env.push_back(enorm[k] * op.norm() * a *
                  (2.0 * std::exp(v * t) - v * v * t * t - 2.0 * v * t) / (v * v) *
                  std::exp(-mu * d));
  }
  attach_envelope(fit, std::move(env), 1e-9);
  return fit;
}

}  // namespace phaselearn
