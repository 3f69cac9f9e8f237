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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phaselearn/diagnostics.hpp"

namespace phaselearn {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool line = true;
  bool markers = true;
  bool dashed = false;
};

struct PlotSpec {
  std::string title, x_label, y_label;
  bool log_x = false;
  bool log_y = true;
  std::vector<PlotSeries> series;  // series[0] is the data series
  std::optional<double> marker_x;  // vertical reference line
  std::string marker_label;
};

/// Renders a standalone SVG document. Non-positive values are dropped on
/// logarithmic axes; an empty data series yields a "no data" annotation.
std::string render_svg(const PlotSpec& spec);
void write_svg(const std::filesystem::path& path, const PlotSpec& spec);

/// Decay curve with fitted exponential and, when present, the envelope.
PlotSpec decay_plot_spec(const DecayFit& fit, const std::string& title);

struct SweepRow {
  std::int64_t N = 0;
  double median_error = 0.0;
  double mean_error = 0.0;
  double success_fraction = 0.0;
  double term_success_fraction = 0.0;
  std::int64_t fallbacks = 0;
};

/// Median error against training-set size with a planned-N marker.
PlotSpec sweep_plot_spec(const std::vector<SweepRow>& rows, double planned_N);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);
/// Reads a decay CSV (abscissa,value,error[,envelope]); rate and prefactor are left unset.
DecayFit read_decay_csv(std::istream& is);

/// Regenerates every SVG from the CSV files in an output directory. Throws
/// ConfigError when the directory holds no plottable CSV. Returns the count.
int emit_plots(const std::filesystem::path& out_dir);

}  // namespace phaselearn
