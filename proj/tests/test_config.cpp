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
#include <filesystem>
#include <sstream>

#include "phaselearn/config.hpp"
#include "phaselearn/errors.hpp"
#include "phaselearn/experiment.hpp"
#include "phaselearn/plot.hpp"

namespace phaselearn {
namespace {

namespace fs = std::filesystem;

const char* kMinimal = R"(
seed = 5
[model]
name = "pinning"
[lattice]
extent = [3]
[targets]
eps = 0.3
[observables]
list = ["Z0"]
[constants]
gamma_prime = 1.0
mu = 2.0
c_prime = 1.0
)";

std::string with(const std::string& extra) { return std::string(kMinimal) + extra; }

TEST(Toml, ScalarsTablesAndArrays) {
  const auto j = parse_toml(R"(
# comment
a = 1
b = -2.5e-1   # trailing comment
c = "x\"y\\z"
d = true
e = inf
[t.u]
list = [
  1, 2,
  3,
]
names = ["p", "q"]
)");
  EXPECT_EQ(j.at("a").get<int>(), 1);
  EXPECT_DOUBLE_EQ(j.at("b").get<double>(), -0.25);
  EXPECT_EQ(j.at("c").get<std::string>(), "x\"y\\z");
  EXPECT_TRUE(j.at("d").get<bool>());
  EXPECT_EQ(j.at("e").get<std::string>(), "inf");
  EXPECT_EQ(j.at("t").at("u").at("list"), nlohmann::json({1, 2, 3}));
  EXPECT_EQ(j.at("t").at("u").at("names"), nlohmann::json({"p", "q"}));
}

TEST(Toml, ErrorsCarryLineNumbers) {
  try {
    parse_toml("a = 1\nb = [1, 2\n");
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
  EXPECT_THROW(parse_toml("a = \"open\n"), ConfigError);
  EXPECT_THROW(parse_toml("= 3\n"), ConfigError);
}

TEST(Config, MinimalDocumentAndDefaults) {
  const ExperimentConfig cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.mode, Mode::steady);
  EXPECT_EQ(cfg.model.name, "pinning");
  EXPECT_EQ(cfg.lattice.extent, std::vector<int>{3});
  EXPECT_DOUBLE_EQ(cfg.eps, 0.3);
  EXPECT_EQ(cfg.training.cap, 100000);
  EXPECT_EQ(cfg.build_observables().size(), 1u);
}

TEST(Config, RejectsInvalidDocuments) {
  EXPECT_THROW(parse_config(with("[training]\nunknown_key = 1\n")), ConfigError);
  EXPECT_THROW(parse_config(with("[training]\ncap = \"many\"\n")), ConfigError);
  EXPECT_THROW(parse_config(std::string(kMinimal).replace(
                   std::string(kMinimal).find("pinning"), 7, "nonexistent")),
               ConfigError);
  EXPECT_THROW(parse_config(with("[model.hyper]\nbogus = 1.0\n")), ConfigError);
  EXPECT_THROW(parse_config(with("[diagnostics]\nA = [1]\nR = [1, 2]\nW = [0, 1, 2]\n")),
               ConfigError);
  EXPECT_THROW(parse_config(with("[diagnostics]\nA = [2]\nR = [0, 1]\nW = [0, 1, 2]\n")),
               ConfigError);
  EXPECT_THROW(parse_config(with("[observables]\n")), ConfigError);
  // Rates are required unless calibration is requested.
  std::string no_rates = kMinimal;
  no_rates.erase(no_rates.find("gamma_prime"), std::string("gamma_prime = 1.0\n").size());
  EXPECT_THROW(parse_config(no_rates), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.toml"), ConfigError);
}

TEST(Config, DigestTracksResultInputsOnly) {
  ExperimentConfig a = parse_config(kMinimal);
  ExperimentConfig b = parse_config(kMinimal);
  EXPECT_EQ(a.digest(), b.digest());
  b.workers = 4;
  EXPECT_EQ(a.digest(), b.digest());
  b.seed = 6;
  EXPECT_NE(a.digest(), b.digest());
  b.seed = a.seed;
  b.mode = Mode::general;
  EXPECT_NE(a.digest(), b.digest());
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& e : fs::directory_iterator(fs::path(PHASELEARN_SOURCE_DIR) / "configs")) {
    if (e.path().extension() != ".toml") continue;
    EXPECT_NO_THROW(load_config(e.path())) << e.path();
  }
}

TEST(Plot, EmptySeriesAndLegend) {
  PlotSpec empty;
  empty.title = "t";
  empty.series.push_back({});
  const std::string svg = render_svg(empty);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("no data"), std::string::npos);

  std::vector<DecayPoint> pts;
  for (int i = 0; i < 5; ++i) pts.push_back({static_cast<double>(i), std::exp(-0.5 * i), 0.0});
  const DecayFit fit = fit_decay("r", pts);
  const std::string decay = render_svg(decay_plot_spec(fit, "decay"));
  EXPECT_NE(decay.find("slope"), std::string::npos);
  EXPECT_EQ(decay.find("no data"), std::string::npos);
}

TEST(Plot, SweepCsvRoundTrip) {
  const std::vector<SweepRow> rows{{100, 0.5, 0.6, 0.2, 0.3, 4}, {1000, 0.25, 0.3, 0.9, 0.95, 0}};
  std::stringstream ss;
  write_sweep_csv(ss, rows);
  const auto back = read_sweep_csv(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].N, rows[i].N);
    EXPECT_DOUBLE_EQ(back[i].median_error, rows[i].median_error);
    EXPECT_DOUBLE_EQ(back[i].term_success_fraction, rows[i].term_success_fraction);
    EXPECT_EQ(back[i].fallbacks, rows[i].fallbacks);
  }
  EXPECT_THROW(emit_plots(fs::temp_directory_path() / "phaselearn_no_such_dir"), ConfigError);
}

TEST(Experiment, OverridesReplaceAnInfeasiblePlan) {
  const ExperimentConfig cfg =
      load_config(fs::path(PHASELEARN_SOURCE_DIR) / "configs" / "tfim_learning.toml");
  const PlanBundle b = make_plan(cfg);
  EXPECT_FALSE(b.planned.has_value());
  EXPECT_FALSE(b.infeasible_reason.empty());
  EXPECT_EQ(b.effective.N, 400);
  EXPECT_EQ(b.effective.r, 1);
  EXPECT_DOUBLE_EQ(b.effective.gamma, 0.5);
  const PlanBundle back = PlanBundle::from_json(b.to_json());
  EXPECT_EQ(back.to_json().dump(), b.to_json().dump());

  ExperimentConfig no_override = cfg;
  no_override.training.N.reset();
  EXPECT_THROW(make_plan(no_override), PlanInfeasible);
}

TEST(Experiment, TrainingAndTestPointsAreDeterministic) {
  ExperimentConfig cfg = parse_config(with("[training]\nN = 50\nr = 0\ngamma = 0.5\n"));
  const Model model(cfg.model.name, cfg.model.hyper, cfg.lattice.build());
  const PlanBundle b = make_plan(cfg);
  const auto one = generate_training(cfg, model, b.effective, 50);
  cfg.workers = 3;
  const auto three = generate_training(cfg, model, b.effective, 50);
  EXPECT_EQ(one, three);
  const auto p1 = make_test_points(cfg, model, b.effective);
  const auto p2 = make_test_points(cfg, model, b.effective);
  ASSERT_EQ(p1.size(), p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(p1[i].x, p2[i].x);
  cfg.seed = 99;
  EXPECT_NE(generate_training(cfg, model, b.effective, 50), one);
}

}  // namespace
}  // namespace phaselearn
