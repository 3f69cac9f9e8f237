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

// Command-line front end: plan, train, predict, diagnose, sweep, plot.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phaselearn/config.hpp"
#include "phaselearn/errors.hpp"
#include "phaselearn/experiment.hpp"
#include "phaselearn/plot.hpp"

namespace {

using namespace phaselearn;

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> workers;
  std::optional<std::string> mode;
};

ExperimentConfig load(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config is required for this command");
  ExperimentConfig cfg = load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.mode) cfg.mode = mode_from_string(*f.mode);
  if (f.workers) {
    if (*f.workers < 1) throw ConfigError("--workers must be at least 1");
    cfg.workers = *f.workers;
  }
  return cfg;
}

std::string show(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void print_plan(const PlanBundle& b) {
  const auto& e = b.effective;
  if (b.planned)
    std::cout << "planned N = " << b.planned->N << " (log2 " << show(b.planned_log2_N) << ")\n";
  else
    std::cout << "planned N infeasible (log2 " << show(b.planned_log2_N) << "); using overrides\n";
  std::cout << "r = " << e.r << ", gamma = " << show(e.gamma) << ", q = " << e.q << ", m_r = " << e.m_r
            << ", t_eps = " << show(e.t_eps) << "\n";
  std::cout << "training samples used = " << e.N << (b.capped ? " (capped)" : "") << "\n";
}

void print_report(const LearningReport& r, const ExperimentConfig& cfg) {
  const auto& ev = r.evaluation;
  if (ev.has_exact)
    std::cout << "success fraction " << show(ev.success_fraction) << " over " << ev.points.size()
              << " test points (target " << show(1.0 - cfg.delta) << "), median error "
              << show(ev.median_error) << "\n";
  else
    std::cout << "predictions written for " << ev.points.size() << " test points (no exact values)\n";
  std::cout << "cell coverage " << show(r.coverage.min_covered_any) << ", fallbacks " << ev.fallbacks << "\n";
}

void print_sweep(const std::vector<SweepRow>& rows) {
  for (const auto& row : rows)
    std::cout << "N = " << row.N << ": median error " << show(row.median_error) << ", success "
              << show(row.success_fraction) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phaselearn: learning Lindbladian phases from classical shadows"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "Experiment file (TOML subset)");
  app.add_option("--seed", f.seed, "Root seed, overrides the config");
  app.add_option("--out", f.out, "Output directory")->capture_default_str();
  app.add_option("--workers", f.workers, "Worker threads");
  app.add_option("--mode", f.mode, "Learning mode")->check(CLI::IsMember({"steady", "general", "slow"}));

  auto* plan_cmd = app.add_subcommand("plan", "Resolve constants and write plan.json");
  auto* train_cmd = app.add_subcommand("train", "Generate training.shadows for the plan");
  auto* predict_cmd = app.add_subcommand("predict", "Predict test points; write predictions.csv, summary.json");
  auto* diagnose_cmd = app.add_subcommand("diagnose", "Run the five assumption scans");
  auto* sweep_cmd = app.add_subcommand("sweep", "Error against training-set size");
  auto* plot_cmd = app.add_subcommand("plot", "Render SVG plots from CSV files in --out");
  for (auto* sub : {plan_cmd, train_cmd, predict_cmd, diagnose_cmd, sweep_cmd, plot_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::filesystem::path out = f.out;
  try {
    if (plot_cmd->parsed()) {
      const int written = emit_plots(out);
      std::cout << "wrote " << written << " SVG files\n";
      return 0;
    }
    const ExperimentConfig cfg = load(f);
    if (plan_cmd->parsed()) {
      print_plan(run_plan_stage(cfg, out));
    } else if (train_cmd->parsed()) {
      const auto n = run_train_stage(cfg, out);
      std::cout << "wrote " << n << " snapshots to " << (out / "training.shadows").string() << "\n";
    } else if (predict_cmd->parsed()) {
      print_report(run_predict_stage(cfg, out), cfg);
    } else if (sweep_cmd->parsed()) {
      print_sweep(run_sweep_stage(cfg, out));
    } else if (diagnose_cmd->parsed()) {
      const auto rep = run_diagnostic_battery(cfg, out);
      for (const auto& [name, fit] : rep.scans)
        std::cout << name << ": " << (fit.pass ? "pass" : "fail") << " (rate " << show(fit.rate) << ")\n";
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PlanInfeasible& e) {
    std::cerr << "infeasible plan: " << e.what() << " (log2 N = " << show(e.log2_samples()) << ")\n";
    return kExitInfeasible;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NoMatchingSamples& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
