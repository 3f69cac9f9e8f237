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

#include "phaselearn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "phaselearn/errors.hpp"
#include "phaselearn/parallel.hpp"
#include "phaselearn/rng.hpp"

namespace phaselearn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json jnum(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double from_jnum(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>() == "inf" ? INFINITY : -INFINITY;
  return NAN;
}

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

constexpr int kDenseSiteCap = 8;

void require_generable(const Model& model, int omega) {
  if (!model.has_oracle(omega) && model.family(omega).lattice().site_count() > kDenseSiteCap)
    throw ConfigError("states without a closed form are limited to " + std::to_string(kDenseSiteCap) +
                      " sites including ancillas");
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const char* const kTrainingFile = "training.shadows";

std::vector<ShadowSnapshot> read_training(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const fs::path path = out_dir / kTrainingFile;
  std::ifstream in(path);
  if (!in) throw ConfigError("missing " + path.string() + "; run the train stage first");
  std::string line;
  bool matched = false;
  const std::string tag = "# config_digest " + cfg.digest();
  while (std::getline(in, line) && !line.empty() && line[0] == '#')
    if (line == tag) matched = true;
  if (!matched) throw ConfigError(path.string() + " was produced from a different configuration");
  in.clear();
  in.seekg(0);
  return read_snapshots(in);
}

}  // namespace

void record_timing(const fs::path& out_dir, const std::string& stage, double seconds) {
  std::ofstream out(out_dir / "timing.txt", std::ios::app);
  char buf[64];
  std::snprintf(buf, sizeof buf, " %.3f\n", seconds);
  out << stage << buf;
}

PlanConstants structural_constants(const ExperimentConfig& cfg, const Model& model) {
  const auto& cs = cfg.constants;
  PlanConstants c;
  double J = 0.0;
  int r0 = 0;
  for (int w : cfg.model.omegas) {
    J = std::max(J, model.family(w).strength());
    r0 = std::max(r0, model.family(w).term_radius());
  }
  c.J = cs.J.value_or(J);
  c.r0 = cs.r0.value_or(r0);
  c.ell = cs.ell.value_or(model.family(0).params_per_site());
  c.k0 = cfg.k0;
  c.D = model.system_lattice().dimension();
  c.n = model.system_lattice().system_sites();
  c.M = static_cast<int>(cfg.observables.size());
  c.W = static_cast<int>(cfg.model.omegas.size());
  c.kappa = cs.kappa;
  c.f_coeff = cs.f_coeff;
  c.f_power = cs.f_power;
  return c;
}

ResolvedConstants resolve_constants(const ExperimentConfig& cfg) {
  const Model model(cfg.model.name, cfg.model.hyper, cfg.lattice.build());
  PlanConstants c = structural_constants(cfg, model);
  const auto& cs = cfg.constants;
  json rec = json::object();
  if (!cs.calibrate) {
    c.gamma_prime = *cs.gamma_prime;
    c.mu = *cs.mu;
    c.c_prime = *cs.c_prime;
    rec["source"] = "explicit";
  } else {
    std::vector<int> ext;
    for (int e : cfg.lattice.extent) ext.push_back(std::min(e, cs.calibration_extent));
    const Lattice cal(ext, cfg.lattice.boundary);
    const Model cm(cfg.model.name, cfg.model.hyper, cal);
    const ParamLindbladian& fam = cm.family(0);
    std::vector<LocalObservable> ops;
    for (const auto& label : cfg.observables) {
      try {
        ops.push_back(parse_pauli_observable(label, cal));
      } catch (const std::logic_error&) {
        // observable does not fit on the calibration lattice
      }
    }
    if (ops.empty()) ops.push_back(parse_pauli_observable("Z0", cal));
    const CMatrix rho0 = cm.reference_state(0).data();
    const double volume_term = std::pow(static_cast<double>(c.ball_volume()), c.kappa);

    ScanOptions so;
    so.workers = cfg.workers;
    double gamma_min = INFINITY, mu_min = INFINITY;
    std::vector<std::pair<double, double>> samples;
    json mix_rates = json::array(), lr_rates = json::array();
    const int m = fam.parameter_count();
    for (int p = 0; p < cs.calibration_points; ++p) {
      Rng rng(derive_seed(cfg.seed, "calibration", static_cast<std::uint64_t>(p)));
      std::vector<double> xv(static_cast<std::size_t>(m)), xpv(static_cast<std::size_t>(m));
      for (auto& v : xv) v = rng.uniform(-1.0, 1.0);
      for (auto& v : xpv) v = rng.uniform(-1.0, 1.0);
      const ParamVector x = fam.params(xv);
      for (std::size_t k = 0; k < ops.size(); ++k) {
        so.fit.seed = derive_seed(cfg.seed, "bootstrap", static_cast<std::uint64_t>(p * 1000 + k));
        const DecayFit fit = mixing_scan(fam, x, rho0, ops[k], cs.t_grid, so);
        mix_rates.push_back(jnum(fit.rate));
        if (std::isfinite(fit.rate)) gamma_min = std::min(gamma_min, fit.rate);
        for (const auto& pt : fit.points)
          if (!pt.excluded && pt.value > kFitFloor) samples.emplace_back(pt.abscissa, pt.value);
      }
      if (!cs.mu) {
        so.fit.seed = derive_seed(cfg.seed, "bootstrap", static_cast<std::uint64_t>(p * 1000 + 999));
        const DecayFit lr = lieb_robinson_scan(fam, x, fam.params(xpv), ops.front(), cs.lr_time,
                                               cal.diameter(), so);
        lr_rates.push_back(jnum(lr.rate));
        if (std::isfinite(lr.rate)) {
          if (!(lr.rate > 0.0)) throw NumericalError("calibration: Lieb-Robinson curve does not decay");
          mu_min = std::min(mu_min, lr.rate);
        }
      }
    }
    if (cs.gamma_prime) {
      c.gamma_prime = *cs.gamma_prime;
    } else {
      if (!std::isfinite(gamma_min)) throw NumericalError("calibration: no measurable mixing curve");
      if (!(gamma_min > 0.0)) throw NumericalError("calibration: mixing curves do not decay");
      c.gamma_prime = gamma_min;
    }
    c.mu = cs.mu.value_or(mu_min);
    if (cs.c_prime) {
      c.c_prime = *cs.c_prime;
    } else {
      double cp = kFitFloor;
      for (const auto& [t, v] : samples) cp = std::max(cp, v * std::exp(c.gamma_prime * t) / volume_term);
      c.c_prime = cp;
    }
    rec["source"] = "calibrated";
    rec["lattice_extent"] = ext;
    rec["points"] = cs.calibration_points;
    rec["observables"] = json::array();
    for (const auto& o : ops) rec["observables"].push_back(o.label);
    rec["mixing_rates"] = mix_rates;
    rec["lieb_robinson_rates"] = lr_rates;
  }
  rec["constants"] = c.to_json();
  return {c, rec};
}

// ---------------------------------------------------------------------------

json PlanBundle::to_json() const {
  return {{"config_digest", config_digest},
          {"planned", planned ? planned->to_json() : json(nullptr)},
          {"planned_log2_N", jnum(planned_log2_N)},
          {"infeasible_reason", infeasible_reason},
          {"requested_N", requested_N},
          {"cap", cap},
          {"capped", capped},
          {"effective", effective.to_json()},
          {"calibration", calibration}};
}

PlanBundle PlanBundle::from_json(const json& j) {
  PlanBundle b;
  b.config_digest = j.at("config_digest").get<std::string>();
  if (!j.at("planned").is_null()) b.planned = LearnerPlan::from_json(j["planned"]);
  b.planned_log2_N = from_jnum(j.at("planned_log2_N"));
  b.infeasible_reason = j.at("infeasible_reason").get<std::string>();
  b.requested_N = j.at("requested_N").get<std::int64_t>();
  b.cap = j.at("cap").get<std::int64_t>();
  b.capped = j.at("capped").get<bool>();
  b.effective = LearnerPlan::from_json(j.at("effective"));
  b.calibration = j.at("calibration");
  return b;
}

PlanBundle make_plan(const ExperimentConfig& cfg) {
  const ResolvedConstants rc = resolve_constants(cfg);
  const auto& t = cfg.training;
  PlanBundle b;
  b.config_digest = cfg.digest();
  b.calibration = rc.record;
  b.cap = t.cap;
  LearnerPlan eff;
  try {
    b.planned = plan(cfg.eps, cfg.delta, cfg.delta_prime, rc.constants, cfg.mode);
    b.planned_log2_N = b.planned->log2_N;
    eff = *b.planned;
  } catch (const PlanInfeasible& e) {
    b.planned_log2_N = e.log2_samples();
    b.infeasible_reason = e.what();
    const bool needs_horizon = cfg.mode != Mode::steady;
    if (!(t.N && t.r && t.gamma && (!needs_horizon || t.t_eps))) throw;
    eff.eps = cfg.eps;
    eff.delta = cfg.delta;
    eff.delta_prime = cfg.delta_prime;
    eff.mode = cfg.mode;
    eff.constants = rc.constants;
    eff.q = required_shadow_count(cfg.eps, cfg.delta_prime, rc.constants.k0, rc.constants.n);
    eff.t_eps = kSteadyTime;
  }
  if (t.r) eff.r = *t.r;
  if (t.gamma) eff.gamma = *t.gamma;
  if (t.q) eff.q = *t.q;
  if (t.t_eps && cfg.mode != Mode::steady) eff.t_eps = *t.t_eps;
  const auto& c = eff.constants;
  eff.m_r = static_cast<int>(std::pow(2.0 * (eff.r + c.r0 + c.k0), c.D)) * c.ell;
  b.requested_N = t.N ? *t.N : b.planned->N;
  b.capped = b.requested_N > t.cap;
  eff.N = std::min(b.requested_N, t.cap);
  eff.log2_N = std::log2(static_cast<double>(eff.N));
  b.effective = eff;
  return b;
}

PlanBundle load_or_make_plan(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const fs::path path = out_dir / "plan.json";
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      const json j = json::parse(in);
      if (j.value("config_digest", "") == cfg.digest()) return PlanBundle::from_json(j);
    } catch (const json::exception&) {
      // stale or foreign file: plan again
    }
  }
  return run_plan_stage(cfg, out_dir);
}

// ---------------------------------------------------------------------------

std::vector<ShadowSnapshot> generate_training(const ExperimentConfig& cfg, const Model& model,
                                              const LearnerPlan& effective, std::int64_t count) {
  for (int w : cfg.model.omegas) require_generable(model, w);
  const double horizon = effective.mode == Mode::steady ? kSteadyTime : effective.t_eps;
  const auto samples = sample_parameters(model.parameter_count(), count, horizon, cfg.seed, cfg.model.omegas);
  std::vector<ShadowSnapshot> out(samples.size());
  parallel_for(samples.size(), cfg.workers, [&](std::size_t i) {
    const PhaseSample& s = samples[i];
    const PhaseState state = model.generate_state(s.x, s.tau, s.omega);
    ShadowSnapshot& snap = out[i];
    snap.x = s.x;
    snap.tau = s.tau;
    snap.omega = s.omega;
    snap.seed = derive_seed(cfg.seed, "measurement", i);
    Rng rng(snap.seed);
    measure_snapshot(state, rng, snap);
  });
  return out;
}

std::vector<TestPoint> make_test_points(const ExperimentConfig& cfg, const Model& model,
                                        const LearnerPlan& effective) {
  std::vector<TestPoint> out(static_cast<std::size_t>(cfg.training.test_points));
  const auto& menu = cfg.model.omegas;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Rng rng(derive_seed(cfg.seed, "test", i));
    auto& p = out[i];
    p.x.resize(static_cast<std::size_t>(model.parameter_count()));
    for (auto& v : p.x) v = rng.uniform(-1.0, 1.0);
    p.tau = effective.mode == Mode::steady ? kSteadyTime : rng.uniform(0.0, effective.t_eps);
    p.omega = menu.size() == 1 ? menu[0] : menu[rng.below(menu.size())];
  }
  return out;
}

std::vector<std::vector<double>> exact_values(const ExperimentConfig& cfg, const Model& model,
                                              const std::vector<TestPoint>& points,
                                              const std::vector<LocalObservable>& observables) {
  std::vector<std::vector<double>> out(points.size(), std::vector<double>(observables.size(), NAN));
  if (!cfg.training.exact) return out;
  for (const auto& p : points) require_generable(model, p.omega);
  parallel_for(points.size(), cfg.workers, [&](std::size_t i) {
    const auto& p = points[i];
    const PhaseState state = model.generate_state(p.x, p.tau, p.omega);
    for (std::size_t k = 0; k < observables.size(); ++k) out[i][k] = state.expectation(observables[k]);
  });
  return out;
}

Evaluation evaluate(const ExperimentConfig& cfg, const Model& model, const LearnerPlan& effective,
                    std::span<const ShadowSnapshot> training, const std::vector<TestPoint>& points,
                    const std::vector<std::vector<double>>& exact) {
  const auto ops = cfg.build_observables();
  const ParamLindbladian& fam = model.family(0);
  const Lattice& lat = model.system_lattice();
  double norm_sum = 0.0;
  for (const auto& o : ops) norm_sum += o.norm();
  PredictOptions po;
  po.mom_batches = cfg.training.mom_batches;

  Evaluation ev;
  ev.points.resize(points.size());
  parallel_for(points.size(), cfg.workers, [&](std::size_t i) {
    PointResult& r = ev.points[i];
    r.point = points[i];
    r.exact = exact[i];
    r.prediction = predict(ops, r.point.x, r.point.tau, r.point.omega, training, effective, lat,
                           *fam.layout(), po);
    r.exact_sum = 0.0;
    for (double e : r.exact) r.exact_sum += e;
    r.normalised_error = std::abs(r.prediction.value - r.exact_sum) / norm_sum;
    r.term_errors.resize(ops.size());
    for (std::size_t k = 0; k < ops.size(); ++k)
      r.term_errors[k] = std::abs(r.prediction.per_term[k] - r.exact[k]) / ops[k].norm();
  });

  std::vector<double> errs;
  std::int64_t ok_points = 0, ok_terms = 0, terms = 0;
  for (const auto& r : ev.points) {
    ev.fallbacks += static_cast<std::int64_t>(r.prediction.warnings.size());
    errs.push_back(r.normalised_error);
    if (r.normalised_error <= effective.eps) ++ok_points;
    for (double e : r.term_errors) {
      ++terms;
      if (e <= effective.eps) ++ok_terms;
    }
  }
  ev.has_exact = !errs.empty() && std::none_of(errs.begin(), errs.end(), [](double e) { return std::isnan(e); });
  if (ev.has_exact) {
    ev.success_fraction = static_cast<double>(ok_points) / static_cast<double>(errs.size());
    ev.term_success_fraction = static_cast<double>(ok_terms) / static_cast<double>(terms);
    ev.median_error = median(errs);
    double s = 0.0;
    for (double e : errs) s += e;
    ev.mean_error = s / static_cast<double>(errs.size());
    ev.max_error = *std::max_element(errs.begin(), errs.end());
  } else {
    ev.success_fraction = ev.term_success_fraction = ev.median_error = ev.mean_error = ev.max_error = NAN;
  }
  return ev;
}

void write_predictions_csv(std::ostream& os, const Evaluation& ev,
                           const std::vector<LocalObservable>& observables) {
  os << "point,x_digest,tau,omega,observable,exact,predicted,abs_error,normalised_error,cell_count,"
        "patch_distance\n";
  for (std::size_t i = 0; i < ev.points.size(); ++i) {
    const auto& r = ev.points[i];
    const std::string head = std::to_string(i) + "," + hex64(fnv1a(encode_params(r.point.x))) + "," +
                             csv_num(r.point.tau) + "," + std::to_string(r.point.omega) + ",";
    std::int64_t min_count = std::numeric_limits<std::int64_t>::max();
    double max_dist = 0.0;
    for (std::size_t k = 0; k < observables.size(); ++k) {
      const double err = std::abs(r.prediction.per_term[k] - r.exact[k]);
      os << head << observables[k].label << ',' << csv_num(r.exact[k]) << ','
         << csv_num(r.prediction.per_term[k]) << ',' << csv_num(err) << ',' << csv_num(r.term_errors[k])
         << ',' << r.prediction.counts[k] << ',' << csv_num(r.prediction.patch_distances[k]) << '\n';
      min_count = std::min(min_count, r.prediction.counts[k]);
      max_dist = std::max(max_dist, r.prediction.patch_distances[k]);
    }
    os << head << "sum," << csv_num(r.exact_sum) << ',' << csv_num(r.prediction.value) << ','
       << csv_num(std::abs(r.prediction.value - r.exact_sum)) << ',' << csv_num(r.normalised_error) << ','
       << min_count << ',' << csv_num(max_dist) << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

struct Context {
  Model model;
  std::vector<LocalObservable> observables;
  PlanBundle plan;
  std::vector<TestPoint> points;
  std::vector<std::vector<double>> exact;
};

Context make_context(const ExperimentConfig& cfg, PlanBundle plan) {
  Context ctx{Model(cfg.model.name, cfg.model.hyper, cfg.lattice.build()), cfg.build_observables(),
              std::move(plan), {}, {}};
  ctx.points = make_test_points(cfg, ctx.model, ctx.plan.effective);
  ctx.exact = exact_values(cfg, ctx.model, ctx.points, ctx.observables);
  return ctx;
}

CoverageReport coverage_for(const ExperimentConfig& cfg, const Context& ctx,
                            std::span<const ShadowSnapshot> training) {
  const auto& eff = ctx.plan.effective;
  const ParamLindbladian& fam = ctx.model.family(0);
  std::vector<std::vector<int>> regions;
  for (const auto& op : ctx.observables)
    regions.push_back(patch_coordinates(op, eff.r, ctx.model.system_lattice(), *fam.layout()));
  return coverage_report(training, eff.gamma, eff.q, regions, eff.mode != Mode::steady, eff.t_eps,
                         static_cast<int>(ctx.observables.size()), derive_seed(cfg.seed, "coverage", 0));
}

json summary_json(const ExperimentConfig& cfg, const Context& ctx, const Evaluation& ev,
                  const CoverageReport& cov, std::int64_t used_N, const std::vector<SweepRow>& sweep) {
  const auto& b = ctx.plan;
  const auto& eff = b.effective;
  json s = {{"config_digest", cfg.digest()},
            {"model", cfg.model.name},
            {"mode", to_string(cfg.mode)},
            {"seed", cfg.seed},
            {"sites", ctx.model.system_lattice().system_sites()},
            {"parameters", ctx.model.parameter_count()},
            {"observables", ctx.observables.size()},
            {"targets", {{"eps", cfg.eps}, {"delta", cfg.delta}, {"delta_prime", cfg.delta_prime}}},
            {"target_success", 1.0 - cfg.delta},
            {"planned_N", b.planned ? json(b.planned->N) : json(nullptr)},
            {"planned_log2_N", jnum(b.planned_log2_N)},
            {"requested_N", b.requested_N},
            {"used_N", used_N},
            {"cap", b.cap},
            {"capped", b.capped},
            {"effective_plan",
             {{"r", eff.r}, {"gamma", eff.gamma}, {"q", eff.q}, {"t_eps", jnum(eff.t_eps)}, {"m_r", eff.m_r}}},
            {"coverage",
             {{"min_covered_any", cov.min_covered_any},
              {"min_covered_q", cov.min_covered_q},
              {"worst_failure_bound", jnum(cov.worst_failure_bound)},
              {"worst_failure_bound_q", jnum(cov.worst_failure_bound_q)}}},
            {"test_points", ev.points.size()},
            {"success_fraction", jnum(ev.success_fraction)},
            {"term_success_fraction", jnum(ev.term_success_fraction)},
            {"median_error", jnum(ev.median_error)},
            {"mean_error", jnum(ev.mean_error)},
            {"max_error", jnum(ev.max_error)},
            {"fallback_predictions", ev.fallbacks},
            {"meets_target", ev.has_exact ? json(ev.success_fraction >= 1.0 - cfg.delta) : json(nullptr)},
            {"wall_clock", "timing.txt"}};
  if (!sweep.empty()) {
    json rows = json::array();
    for (const auto& r : sweep)
      rows.push_back({{"N", r.N},
                      {"median_error", jnum(r.median_error)},
                      {"success_fraction", jnum(r.success_fraction)},
                      {"fallbacks", r.fallbacks}});
    s["sweep"] = rows;
  }
  return s;
}

LearningReport predict_with(const ExperimentConfig& cfg, const Context& ctx,
                            std::span<const ShadowSnapshot> training, const fs::path& out_dir,
                            const std::vector<SweepRow>& sweep) {
  LearningReport rep;
  rep.plan = ctx.plan;
  rep.evaluation = evaluate(cfg, ctx.model, ctx.plan.effective, training, ctx.points, ctx.exact);
  rep.coverage = coverage_for(cfg, ctx, training);
  rep.sweep = sweep;
  std::ostringstream csv;
  write_predictions_csv(csv, rep.evaluation, ctx.observables);
  write_text(out_dir / "predictions.csv", csv.str());
  write_json(out_dir / "coverage.json", rep.coverage.to_json());
  rep.summary = summary_json(cfg, ctx, rep.evaluation, rep.coverage,
                             static_cast<std::int64_t>(training.size()), sweep);
  write_json(out_dir / "summary.json", rep.summary);
  return rep;
}

std::vector<SweepRow> sweep_with(const ExperimentConfig& cfg, const Context& ctx,
                                 std::span<const ShadowSnapshot> training, const fs::path& out_dir) {
  std::vector<SweepRow> rows;
  for (std::int64_t n : cfg.training.sweep) {
    const auto used = std::min<std::int64_t>(n, static_cast<std::int64_t>(training.size()));
    const Evaluation ev = evaluate(cfg, ctx.model, ctx.plan.effective,
                                   training.subspan(0, static_cast<std::size_t>(used)), ctx.points, ctx.exact);
    rows.push_back({used, ev.median_error, ev.mean_error, ev.success_fraction, ev.term_success_fraction,
                    ev.fallbacks});
  }
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_text(out_dir / "sweep.csv", csv.str());
  return rows;
}

void write_training(const ExperimentConfig& cfg, const fs::path& out_dir,
                    const std::vector<ShadowSnapshot>& training) {
  std::ostringstream os;
  write_snapshots(os, training,
                  {"config_digest " + cfg.digest(), "model " + cfg.model.name,
                   "seed " + std::to_string(cfg.seed), "mode " + to_string(cfg.mode)});
  write_text(out_dir / kTrainingFile, os.str());
}

}  // namespace

PlanBundle run_plan_stage(const ExperimentConfig& cfg, const fs::path& out_dir) {
  Stopwatch sw;
  fs::create_directories(out_dir);
  PlanBundle b = make_plan(cfg);
  write_json(out_dir / "plan.json", b.to_json());
  record_timing(out_dir, "plan", sw.seconds());
  return b;
}

std::int64_t run_train_stage(const ExperimentConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const PlanBundle b = load_or_make_plan(cfg, out_dir);
  Stopwatch sw;
  const Model model(cfg.model.name, cfg.model.hyper, cfg.lattice.build());
  const auto training = generate_training(cfg, model, b.effective, b.effective.N);
  write_training(cfg, out_dir, training);
  record_timing(out_dir, "train", sw.seconds());
  return static_cast<std::int64_t>(training.size());
}

LearningReport run_predict_stage(const ExperimentConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const PlanBundle b = load_or_make_plan(cfg, out_dir);
  const auto training = read_training(cfg, out_dir);
  Stopwatch sw;
  const Context ctx = make_context(cfg, b);
  LearningReport rep = predict_with(cfg, ctx, training, out_dir, {});
  record_timing(out_dir, "predict", sw.seconds());
  return rep;
}

std::vector<SweepRow> run_sweep_stage(const ExperimentConfig& cfg, const fs::path& out_dir) {
  if (cfg.training.sweep.empty()) throw ConfigError("[training] sweep is empty");
  fs::create_directories(out_dir);
  const PlanBundle b = load_or_make_plan(cfg, out_dir);
  const auto training = read_training(cfg, out_dir);
  Stopwatch sw;
  const Context ctx = make_context(cfg, b);
  auto rows = sweep_with(cfg, ctx, training, out_dir);
  write_svg(out_dir / "sweep.svg", sweep_plot_spec(rows, b.planned ? static_cast<double>(b.planned->N) : NAN));
  record_timing(out_dir, "sweep", sw.seconds());
  return rows;
}

LearningReport run_learning_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const PlanBundle b = run_plan_stage(cfg, out_dir);
  Stopwatch sw;
  const Model model(cfg.model.name, cfg.model.hyper, cfg.lattice.build());
  const auto training = generate_training(cfg, model, b.effective, b.effective.N);
  write_training(cfg, out_dir, training);
  record_timing(out_dir, "train", sw.seconds());

  Stopwatch sw2;
  const Context ctx = make_context(cfg, b);
  std::vector<SweepRow> sweep;
  if (!cfg.training.sweep.empty()) sweep = sweep_with(cfg, ctx, training, out_dir);
  LearningReport rep = predict_with(cfg, ctx, training, out_dir, sweep);
  if (!sweep.empty())
    write_svg(out_dir / "sweep.svg", sweep_plot_spec(sweep, b.planned ? static_cast<double>(b.planned->N) : NAN));
  record_timing(out_dir, "predict", sw2.seconds());
  return rep;
}

// ---------------------------------------------------------------------------

json BatteryReport::to_json() const {
  json scans_j = json::object();
  for (const auto& [name, fit] : scans)
    scans_j[name] = {{"pass", fit.pass},
                     {"rate", jnum(fit.rate)},
                     {"rate_ci", {jnum(fit.rate_ci_low), jnum(fit.rate_ci_high)}},
                     {"fitted_points", fit.fitted_points},
                     {"has_envelope", fit.has_envelope},
                     {"envelope_valid", fit.envelope_valid}};
  return {{"scans", scans_j}, {"all_pass", all_pass}};
}

BatteryReport run_diagnostic_battery(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const Lattice lat = cfg.lattice.build();
  if (lat.site_count() > kScanSiteCap)
    throw ConfigError("diagnostic scans are limited to " + std::to_string(kScanSiteCap) + " sites");
  const auto& d = cfg.diagnostics;
  const Model model(cfg.model.name, cfg.model.hyper, lat);
  const ParamLindbladian& fam = model.family(0);

  Region A, R, W;
  if (!d.A.empty()) {
    A = Region::of(d.A);
    R = Region::of(d.R);
    W = Region::of(d.W);
  } else if (lat.dimension() == 1 && lat.system_sites() >= 3) {
    const int c = lat.system_sites() / 2;
    A = Region::of({c});
    R = enlarge(lat, A, 1);
    W = Region::all(lat);
  } else {
    A = R = W = Region::all(lat);
  }
  try {
    check_nesting(lat, A, R, W);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[diagnostics] ") + e.what());
  }

  Stopwatch sw;
  fs::create_directories(out_dir / "diagnostics");
  const ResolvedConstants rc = resolve_constants(cfg);
  const auto& c = rc.constants;
  const int m = fam.parameter_count();
  std::vector<double> xv(static_cast<std::size_t>(m), 0.0), xpv(static_cast<std::size_t>(m));
  {
    Rng rng(derive_seed(cfg.seed, "diagnostics", 0));
    if (d.params == "random")
      for (auto& v : xv) v = rng.uniform(-1.0, 1.0);
    Rng rng2(derive_seed(cfg.seed, "diagnostics", 1));
    for (auto& v : xpv) v = rng2.uniform(-1.0, 1.0);
  }
  const ParamVector x = fam.params(xv), xp = fam.params(xpv);
  const LocalObservable op = parse_pauli_observable(d.observable, lat);
  const CMatrix rho_ref = model.reference_state(0).data();

  ScanOptions so;
  so.workers = cfg.workers;
  so.constants.mu = std::isfinite(c.mu) ? c.mu : 1.0;
  so.constants.gamma_prime = c.gamma_prime;
  so.constants.poly_A = c.c_prime * std::pow(static_cast<double>(c.ball_volume()), c.kappa);
  auto seeded = [&](std::uint64_t k) {
    ScanOptions o = so;
    o.fit.seed = derive_seed(cfg.seed, "bootstrap", k);
    return o;
  };

  BatteryReport rep;
  rep.scans.emplace_back("lieb_robinson",
                         lieb_robinson_scan(fam, x, xp, op, d.lr_time, d.r_max < 0 ? lat.diameter() : d.r_max,
                                            seeded(1)));
  rep.scans.emplace_back("mixing", mixing_scan(fam, x, rho_ref, op, d.t_grid, seeded(2)));
  rep.scans.emplace_back("ltqo", ltqo_scan(fam, x, xp, op, d.s_grid, seeded(3)));
  rep.scans.emplace_back("compatibility", compatibility_scan(fam, x, xp, A, R, W, d.t_grid, seeded(4)));
  StabilityOptions stab;
  stab.shift = d.shift;
  stab.times = d.stability_times;
  rep.scans.emplace_back("stability", stability_scan(fam, x, op, rho_ref, stab, seeded(5)));

  for (const auto& [name, fit] : rep.scans) {
    rep.all_pass = rep.all_pass && fit.pass;
    std::ostringstream csv;
    fit.write_csv(csv);
    write_text(out_dir / "diagnostics" / (name + ".csv"), csv.str());
    write_json(out_dir / "diagnostics" / (name + ".json"), fit.to_json());
    write_svg(out_dir / "diagnostics" / (name + ".svg"), decay_plot_spec(fit, name + " scan"));
  }
  json j = rep.to_json();
  j["config_digest"] = cfg.digest();
  j["observable"] = op.label;
  j["x"] = encode_params(xv);
  j["x_prime"] = encode_params(xpv);
  j["regions"] = {{"A", A.sites()}, {"R", R.sites()}, {"W", W.sites()}};
  j["constants"] = rc.record;
  write_json(out_dir / "battery.json", j);
  record_timing(out_dir, "diagnose", sw.seconds());
  return rep;
}

}  // namespace phaselearn
