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

#include "phaselearn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phaselearn/errors.hpp"

namespace phaselearn {
namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 78, kRight = 24, kTop = 40, kBottom = 56;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in transformed units

  double tf(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }

  void fit(const std::vector<double>& vals) {
    bool any = false;
    double a = 0, b = 0;
    for (double v : vals) {
      if (!usable(v)) continue;
      const double t = tf(v);
      if (!any) a = b = t;
      a = std::min(a, t);
      b = std::max(b, t);
      any = true;
    }
    if (!any) a = 0, b = 1;
    if (b - a < 1e-12) {
      const double pad = log ? 0.5 : std::max(1.0, std::abs(a) * 0.1);
      a -= pad;
      b += pad;
    }
    if (log) {
      a = std::floor(a);
      b = std::ceil(b);
    } else {
      const double pad = 0.05 * (b - a);
      a -= pad;
      b += pad;
    }
    lo = a;
    hi = b;
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int step = std::max(1, static_cast<int>(std::ceil((hi - lo) / 8.0)));
      for (double e = lo; e <= hi + 1e-9; e += step) out.push_back(e);
      return out;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
    return out;
  }

  std::string label(double t) const {
    if (log) return "1e" + fmt("%g", t);
    return fmt("%g", std::abs(t) < 1e-12 ? 0.0 : t);
  }
};

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  Axis ax, ay;
  ax.log = spec.log_x;
  ay.log = spec.log_y;
  std::vector<double> xs, ys;
  bool has_data = false;
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& ser = spec.series[s];
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (!ax.usable(ser.x[i]) || !ay.usable(ser.y[i])) continue;
      xs.push_back(ser.x[i]);
      ys.push_back(ser.y[i]);
      if (s == 0) has_data = true;
    }
  }
  if (spec.marker_x && ax.usable(*spec.marker_x)) xs.push_back(*spec.marker_x);
  ax.fit(xs);
  ay.fit(ys);

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (ax.tf(v) - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double v) { return kTop + ph - (ay.tf(v) - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(spec.title) << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ax.ticks()) {
    const double x = kLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw;
    o << "<line x1=\"" << fmt("%.2f", x) << "\" y1=\"" << kTop + ph << "\" x2=\"" << fmt("%.2f", x)
      << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt("%.2f", x) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">"
      << ax.label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = kTop + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph;
    o << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt("%.2f", y) << "\" x2=\"" << kLeft
      << "\" y2=\"" << fmt("%.2f", y) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt("%.2f", y + 4) << "\" text-anchor=\"end\">"
      << ay.label(t) << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 14 << "\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(spec.y_label) << "</text>\n";

  if (!has_data) {
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kTop + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"18\" fill=\"#888\">no data</text>\n";
  }

  int legend = 0;
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& ser = spec.series[s];
    const char* color = kColors[s % 5];
    std::string path;
    std::ostringstream dots;
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (!ax.usable(ser.x[i]) || !ay.usable(ser.y[i])) continue;
      const double x = px(ser.x[i]), y = py(ser.y[i]);
      path += (path.empty() ? "M" : " L") + fmt("%.2f", x) + "," + fmt("%.2f", y);
      if (ser.markers)
        dots << "<circle cx=\"" << fmt("%.2f", x) << "\" cy=\"" << fmt("%.2f", y) << "\" r=\"3\" fill=\""
             << color << "\"/>\n";
    }
    if (path.empty()) continue;
    if (ser.line)
      o << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
        << (ser.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    o << dots.str();
    const double ly = kTop + 16 + 16 * legend++;
    o << "<line x1=\"" << kLeft + pw - 190 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kLeft + pw - 170
      << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (ser.dashed ? " stroke-dasharray=\"4,3\"" : "") << "/>\n";
    o << "<text x=\"" << kLeft + pw - 164 << "\" y=\"" << ly << "\">" << escape(ser.label) << "</text>\n";
  }

  if (spec.marker_x && ax.usable(*spec.marker_x)) {
    const double x = px(*spec.marker_x);
    o << "<line x1=\"" << fmt("%.2f", x) << "\" y1=\"" << kTop << "\" x2=\"" << fmt("%.2f", x) << "\" y2=\""
      << kTop + ph << "\" stroke=\"#555\" stroke-dasharray=\"3,3\"/>\n";
    o << "<text x=\"" << fmt("%.2f", x - 4) << "\" y=\"" << kTop + ph - 8
      << "\" text-anchor=\"end\" fill=\"#555\">" << escape(spec.marker_label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::filesystem::path& path, const PlotSpec& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << render_svg(spec);
}

PlotSpec decay_plot_spec(const DecayFit& fit, const std::string& title) {
  PlotSpec spec;
  spec.title = title;
  spec.x_label = fit.abscissa_label;
  spec.y_label = "difference";
  PlotSeries data;
  data.label = "measured";
  data.line = false;
  for (const auto& p : fit.points) {
    if (p.excluded) continue;
    data.x.push_back(p.abscissa);
    data.y.push_back(p.value);
  }
  spec.series.push_back(data);
  if (std::isfinite(fit.rate) && fit.fitted_points >= 2 && !data.x.empty()) {
    PlotSeries line;
    line.label = "fit slope " + fmt("%.4g", -fit.rate);
    line.markers = false;
    const auto [lo, hi] = std::minmax_element(data.x.begin(), data.x.end());
    for (int i = 0; i <= 40; ++i) {
      const double x = *lo + (*hi - *lo) * i / 40.0;
      line.x.push_back(x);
      line.y.push_back(fit.prefactor * std::exp(-fit.rate * x));
    }
    spec.series.push_back(line);
  }
  if (fit.has_envelope) {
    PlotSeries env;
    env.label = "envelope";
    env.markers = false;
    env.dashed = true;
    for (std::size_t i = 0; i < fit.points.size() && i < fit.envelope.size(); ++i) {
      if (std::isnan(fit.envelope[i])) continue;
      env.x.push_back(fit.points[i].abscissa);
      env.y.push_back(fit.envelope[i]);
    }
    spec.series.push_back(env);
  }
  return spec;
}

PlotSpec sweep_plot_spec(const std::vector<SweepRow>& rows, double planned_N) {
  PlotSpec spec;
  spec.title = "prediction error against training size";
  spec.x_label = "N";
  spec.y_label = "median normalised error";
  spec.log_x = true;
  PlotSeries s;
  s.label = "median error";
  for (const auto& r : rows) {
    s.x.push_back(static_cast<double>(r.N));
    s.y.push_back(r.median_error);
  }
  spec.series.push_back(s);
  if (std::isfinite(planned_N) && planned_N > 0) {
    spec.marker_x = planned_N;
    spec.marker_label = "planned N " + fmt("%.3g", planned_N);
  }
  return spec;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "N,median_error,mean_error,success_fraction,term_success_fraction,fallbacks\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%lld\n", static_cast<long long>(r.N),
                  r.median_error, r.mean_error, r.success_fraction, r.term_success_fraction,
                  static_cast<long long>(r.fallbacks));
    os << buf;
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::runtime_error("bad number '" + s + "' in CSV");
  return v;
}

}  // namespace

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
  std::string line;
  std::vector<SweepRow> rows;
  if (!std::getline(is, line)) return rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() < 6) throw std::runtime_error("short row in sweep CSV");
    SweepRow r;
    r.N = static_cast<std::int64_t>(to_double(c[0]));
    r.median_error = to_double(c[1]);
    r.mean_error = to_double(c[2]);
    r.success_fraction = to_double(c[3]);
    r.term_success_fraction = to_double(c[4]);
    r.fallbacks = static_cast<std::int64_t>(to_double(c[5]));
    rows.push_back(r);
  }
  return rows;
}

DecayFit read_decay_csv(std::istream& is) {
  DecayFit fit;
  std::string line;
  if (!std::getline(is, line)) return fit;
  const auto head = split_csv(line);
  if (head.empty()) return fit;
  fit.abscissa_label = head[0];
  fit.has_envelope = head.size() >= 4 && head[3] == "envelope";
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() < 3) throw std::runtime_error("short row in decay CSV");
    DecayPoint p;
    p.abscissa = to_double(c[0]);
    p.value = to_double(c[1]);
    p.error = to_double(c[2]);
    p.excluded = std::isnan(p.value);
    fit.points.push_back(p);
    if (fit.has_envelope) fit.envelope.push_back(c.size() > 3 ? to_double(c[3]) : NAN);
  }
  return fit;
}

int emit_plots(const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  int written = 0;
  const fs::path diag = out_dir / "diagnostics";
  if (fs::is_directory(diag)) {
    std::vector<fs::path> csvs;
    for (const auto& e : fs::directory_iterator(diag))
      if (e.path().extension() == ".csv") csvs.push_back(e.path());
    std::sort(csvs.begin(), csvs.end());
    for (const auto& csv : csvs) {
      std::ifstream in(csv);
      DecayFit fit = read_decay_csv(in);
      fs::path record = csv;
      record.replace_extension(".json");
      if (fs::exists(record)) {
        std::ifstream rj(record);
        const auto j = nlohmann::json::parse(rj);
        auto num = [](const nlohmann::json& v) {
          return v.is_number() ? v.get<double>() : (v.is_string() && v.get<std::string>() == "inf" ? INFINITY : NAN);
        };
        fit.rate = num(j.value("rate", nlohmann::json()));
        fit.prefactor = num(j.value("prefactor", nlohmann::json()));
        fit.fitted_points = j.value("fitted_points", 0);
      } else {
        const auto env = fit.envelope;
        const bool had = fit.has_envelope;
        fit = fit_decay(fit.abscissa_label, fit.points);
        if (had) attach_envelope(fit, env);
      }
      fs::path svg = csv;
      svg.replace_extension(".svg");
      write_svg(svg, decay_plot_spec(fit, csv.stem().string() + " scan"));
      ++written;
    }
  }
  const fs::path sweep = out_dir / "sweep.csv";
  if (fs::exists(sweep)) {
    std::ifstream in(sweep);
    const auto rows = read_sweep_csv(in);
    double planned = NAN;
    if (fs::exists(out_dir / "plan.json")) {
      std::ifstream pj(out_dir / "plan.json");
      const auto j = nlohmann::json::parse(pj);
      if (j.contains("planned") && j["planned"].is_object() && j["planned"]["N"].is_number())
        planned = j["planned"]["N"].get<double>();
    }
    write_svg(out_dir / "sweep.svg", sweep_plot_spec(rows, planned));
    ++written;
  }
  if (written == 0) throw ConfigError("no CSV files to plot in '" + out_dir.string() + "'");
  return written;
}

}  // namespace phaselearn
