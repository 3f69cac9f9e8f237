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

#include "phaselearn/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "phaselearn/diagnostics.hpp"
#include "phaselearn/errors.hpp"
#include "phaselearn/rng.hpp"

namespace phaselearn {
namespace {

using nlohmann::json;

[[noreturn]] void fail_at(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Removes a trailing comment and reports the bracket depth change, both
// ignoring anything inside strings.
std::string strip_comment(const std::string& line, int& depth) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '#') return line.substr(0, i);
    else if (c == '[') ++depth;
    else if (c == ']') --depth;
  }
  return line;
}

bool bare_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

class ValueParser {
 public:
  ValueParser(const std::string& s, int line) : s_(s), line_(line) {}

  json parse() {
    json v = value();
    skip_ws();
    if (i_ != s_.size()) fail_at(line_, "unexpected text after value: '" + s_.substr(i_) + "'");
    return v;
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  json value() {
    skip_ws();
    if (i_ >= s_.size()) fail_at(line_, "missing value");
    const char c = s_[i_];
    if (c == '"') return string();
    if (c == '[') return array();
    std::size_t end = i_;
    while (end < s_.size() && s_[end] != ',' && s_[end] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[end])))
      ++end;
    const std::string tok = s_.substr(i_, end - i_);
    i_ = end;
    return scalar(tok);
  }

  json string() {
    ++i_;
    std::string out;
    while (i_ < s_.size() && s_[i_] != '"') {
      char c = s_[i_++];
      if (c == '\\') {
        if (i_ >= s_.size()) break;
        const char e = s_[i_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail_at(line_, std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (i_ >= s_.size()) fail_at(line_, "unterminated string");
    ++i_;
    return out;
  }

  json array() {
    ++i_;
    json out = json::array();
    for (;;) {
      skip_ws();
      if (i_ >= s_.size()) fail_at(line_, "unterminated array");
      if (s_[i_] == ']') {
        ++i_;
        return out;
      }
      out.push_back(value());
      skip_ws();
      if (i_ < s_.size() && s_[i_] == ',') ++i_;
      else if (i_ < s_.size() && s_[i_] != ']') fail_at(line_, "expected ',' or ']' in array");
    }
  }

  json scalar(const std::string& tok) {
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok == "inf" || tok == "+inf") return "inf";
    if (tok == "-inf") return "-inf";
    std::int64_t iv = 0;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    const char* ib = (b != e && *b == '+') ? b + 1 : b;
    auto [p, ec] = std::from_chars(ib, e, iv);
    if (ec == std::errc() && p == e) return iv;
    char* endp = nullptr;
    const double dv = std::strtod(tok.c_str(), &endp);
    if (tok.empty() || endp != tok.c_str() + tok.size() || !std::isfinite(dv))
      fail_at(line_, "cannot parse value '" + tok + "'");
    return dv;
  }

  const std::string& s_;
  int line_;
  std::size_t i_ = 0;
};

// Typed, consumption-tracking view of one table.
class Section {
 public:
  Section(const json& j, std::string name) : name_(std::move(name)) {
    if (!j.is_null() && !j.is_object()) throw ConfigError("'" + name_ + "' must be a table");
    if (j.is_object()) j_ = j;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::optional<double> number(const std::string& key) {
    const json* v = take(key);
    if (!v) return std::nullopt;
    if (v->is_number()) return v->get<double>();
    if (v->is_string() && v->get<std::string>() == "inf") return INFINITY;
    bad(key, "a number");
  }
  std::optional<std::int64_t> integer(const std::string& key) {
    const json* v = take(key);
    if (!v) return std::nullopt;
    if (v->is_number_integer()) return v->get<std::int64_t>();
    bad(key, "an integer");
  }
  std::optional<std::string> text(const std::string& key) {
    const json* v = take(key);
    if (!v) return std::nullopt;
    if (v->is_string()) return v->get<std::string>();
    bad(key, "a string");
  }
  std::optional<bool> boolean(const std::string& key) {
    const json* v = take(key);
    if (!v) return std::nullopt;
    if (v->is_boolean()) return v->get<bool>();
    bad(key, "true or false");
  }
  std::optional<std::vector<double>> numbers(const std::string& key) {
    const json* v = take(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) bad(key, "an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) bad(key, "an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::optional<std::vector<std::int64_t>> integers(const std::string& key) {
    const json* v = take(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) bad(key, "an array of integers");
    std::vector<std::int64_t> out;
    for (const auto& e : *v) {
      if (!e.is_number_integer()) bad(key, "an array of integers");
      out.push_back(e.get<std::int64_t>());
    }
    return out;
  }
  std::optional<std::vector<std::string>> strings(const std::string& key) {
    const json* v = take(key);
    if (!v) return std::nullopt;
    if (!v->is_array()) bad(key, "an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *v) {
      if (!e.is_string()) bad(key, "an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }
  // Integer or the literal "plan".
  std::optional<std::int64_t> integer_or_plan(const std::string& key) {
    if (is_plan(key)) return std::nullopt;
    return integer(key);
  }
  std::optional<double> number_or_plan(const std::string& key) {
    if (is_plan(key)) return std::nullopt;
    return number(key);
  }
  json table(const std::string& key) {
    const json* v = take(key);
    if (!v) return json();
    if (!v->is_object()) bad(key, "a table");
    return *v;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key()))
        throw ConfigError("unknown key '" + it.key() + "' in " + where());
  }

 private:
  bool is_plan(const std::string& key) {
    if (j_.contains(key) && j_[key].is_string() && j_[key].get<std::string>() == "plan") {
      used_.insert(key);
      return true;
    }
    return false;
  }
  const json* take(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    used_.insert(key);
    return &j_[key];
  }
  [[noreturn]] void bad(const std::string& key, const std::string& what) const {
    throw ConfigError("'" + key + "' in " + where() + " must be " + what);
  }
  std::string where() const { return name_.empty() ? "the top level" : "[" + name_ + "]"; }

  json j_ = json::object();
  std::string name_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

std::vector<int> to_ints(const std::vector<std::int64_t>& v) {
  return std::vector<int>(v.begin(), v.end());
}

}  // namespace

json parse_toml(const std::string& text) {
  json root = json::object();
  json* table = &root;
  std::set<std::string> headers;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::string pending_key, pending_value;
  int pending_line = 0, depth = 0;

  auto assign = [&](const std::string& key, const std::string& value, int line) {
    if (table->contains(key)) fail_at(line, "duplicate key '" + key + "'");
    (*table)[key] = ValueParser(value, line).parse();
  };

  while (std::getline(in, raw)) {
    ++lineno;
    int delta = 0;
    const std::string line = trim(strip_comment(raw, delta));
    if (!pending_key.empty()) {
      pending_value += ' ' + line;
      depth += delta;
      if (depth <= 0) {
        assign(pending_key, pending_value, pending_line);
        pending_key.clear();
      }
      continue;
    }
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) fail_at(lineno, "malformed table header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!headers.insert(name).second) fail_at(lineno, "table [" + name + "] defined twice");
      table = &root;
      std::size_t start = 0;
      for (;;) {
        const auto dot = name.find('.', start);
        const std::string part = trim(name.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
        if (!bare_key(part)) fail_at(lineno, "bad table name '" + name + "'");
        json& next = (*table)[part];
        if (next.is_null()) next = json::object();
        if (!next.is_object()) fail_at(lineno, "'" + part + "' is not a table");
        table = &next;
        if (dot == std::string::npos) break;
        start = dot + 1;
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!bare_key(key)) fail_at(lineno, "bad key '" + key + "'");
    const std::string value = trim(line.substr(eq + 1));
    if (delta > 0) {
      pending_key = key;
      pending_value = value;
      pending_line = lineno;
      depth = delta;
      continue;
    }
    assign(key, value, lineno);
  }
  if (!pending_key.empty()) fail_at(pending_line, "unterminated array");
  return root;
}

std::vector<LocalObservable> ExperimentConfig::build_observables() const {
  const Lattice lat = lattice.build();
  std::vector<LocalObservable> out;
  for (const auto& label : observables) out.push_back(parse_pauli_observable(label, lat));
  return out;
}

std::string ExperimentConfig::digest() const {
  const std::string key = source.dump() + "|" + std::to_string(seed) + "|" + to_string(mode);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
  return buf;
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig cfg;
  cfg.source = doc;
  Section top(doc, "");
  if (auto s = top.integer("seed")) {
    require(*s >= 0, "seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(*s);
  }
  if (auto m = top.text("mode")) {
    try {
      cfg.mode = mode_from_string(*m);
    } catch (const std::exception&) {
      throw ConfigError("mode must be steady, general or slow");
    }
  }
  if (auto w = top.integer("workers")) {
    require(*w >= 1, "workers must be at least 1");
    cfg.workers = static_cast<int>(*w);
  }

  // [model]
  {
    Section s(top.table("model"), "model");
    auto name = s.text("name");
    require(name.has_value(), "[model] needs a name");
    const auto& names = catalog_names();
    if (std::find(names.begin(), names.end(), *name) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw ConfigError("unknown model '" + *name + "' (available: " + list + ")");
    }
    cfg.model.name = *name;
    const json hj = s.table("hyper");
    Section h(hj, "model.hyper");
    Hyperparams given;
    if (hj.is_object())
      for (auto it = hj.begin(); it != hj.end(); ++it) given[it.key()] = *h.number(it.key());
    h.finish();
    cfg.model.hyper = complete_hyperparams(*name, given);
    if (auto om = s.integers("omegas")) {
      require(!om->empty(), "[model] omegas must not be empty");
      cfg.model.omegas = to_ints(*om);
    }
    s.finish();
  }

  // [lattice]
  {
    Section s(top.table("lattice"), "lattice");
    auto ext = s.integers("extent");
    require(ext.has_value() && !ext->empty(), "[lattice] needs an extent array");
    require(ext->size() <= 3, "[lattice] supports at most three dimensions");
    for (auto e : *ext) require(e >= 1 && e <= 64, "[lattice] extents must lie in 1..64");
    cfg.lattice.extent = to_ints(*ext);
    const std::string b = s.text("boundary").value_or("open");
    require(b == "open" || b == "periodic", "[lattice] boundary must be open or periodic");
    cfg.lattice.boundary = b == "open" ? Boundary::open : Boundary::periodic;
    s.finish();
  }
  const Lattice lat = cfg.lattice.build();
  const Model model(cfg.model.name, cfg.model.hyper, lat);
  for (int w : cfg.model.omegas)
    require(w >= 0 && w < model.ancilla_menu_size(),
            "[model] omegas entries must lie in 0.." + std::to_string(model.ancilla_menu_size() - 1));

  // [targets]
  {
    Section s(top.table("targets"), "targets");
    cfg.eps = s.number("eps").value_or(0.1);
    cfg.delta = s.number("delta").value_or(0.1);
    cfg.delta_prime = s.number("delta_prime").value_or(cfg.delta);
    require(cfg.eps > 0 && cfg.eps <= 1, "[targets] eps must lie in (0, 1]");
    require(cfg.delta > 0 && cfg.delta < 1, "[targets] delta must lie in (0, 1)");
    require(cfg.delta_prime > 0 && cfg.delta_prime < 1, "[targets] delta_prime must lie in (0, 1)");
    s.finish();
  }

  // [observables]
  {
    Section s(top.table("observables"), "observables");
    if (auto l = s.strings("list")) cfg.observables = *l;
    if (auto single = s.text("single")) {
      require(single->size() == 1 && std::string("XYZ").find((*single)[0]) != std::string::npos,
              "[observables] single must be X, Y or Z");
      for (int i = 0; i < lat.system_sites(); ++i) cfg.observables.push_back(*single + std::to_string(i));
    }
    require(!cfg.observables.empty(), "[observables] needs a list or a single-site letter");
    if (auto k = s.integer("k0")) {
      require(*k >= 1, "[observables] k0 must be at least 1");
      cfg.k0 = static_cast<int>(*k);
    }
    s.finish();
    std::vector<LocalObservable> ops;
    try {
      ops = cfg.build_observables();
    } catch (const std::logic_error& e) {
      throw ConfigError(std::string("[observables] ") + e.what());
    }
    int widest = 0;
    for (const auto& o : ops) widest = std::max(widest, static_cast<int>(o.support.size()));
    if (cfg.k0 == 0) cfg.k0 = widest;
    require(widest <= cfg.k0, "[observables] an observable is wider than k0");
  }

  // [constants]
  {
    Section s(top.table("constants"), "constants");
    auto& c = cfg.constants;
    c.calibrate = s.boolean("calibrate").value_or(false);
    if (auto v = s.integer("calibration_extent")) c.calibration_extent = static_cast<int>(*v);
    if (auto v = s.integer("calibration_points")) c.calibration_points = static_cast<int>(*v);
    require(c.calibration_extent >= 1 && c.calibration_extent <= 6, "[constants] calibration_extent must lie in 1..6");
    require(c.calibration_points >= 1, "[constants] calibration_points must be positive");
    if (auto v = s.numbers("t_grid")) c.t_grid = *v;
    for (double t : c.t_grid) require(t >= 0, "[constants] t_grid entries must be non-negative");
    c.lr_time = s.number("lr_time").value_or(1.0);
    c.gamma_prime = s.number("gamma_prime");
    c.mu = s.number("mu");
    c.c_prime = s.number("c_prime");
    c.J = s.number("J");
    if (auto v = s.integer("ell")) c.ell = static_cast<int>(*v);
    if (auto v = s.integer("r0")) c.r0 = static_cast<int>(*v);
    c.kappa = s.number("kappa").value_or(1.0);
    c.f_coeff = s.number("f_coeff").value_or(1.0);
    c.f_power = s.number("f_power").value_or(1.0);
    if (!c.calibrate)
      require(c.gamma_prime && c.mu && c.c_prime,
              "[constants] needs gamma_prime, mu and c_prime unless calibrate = true");
    for (auto* v : {&c.gamma_prime, &c.mu, &c.c_prime, &c.J})
      if (*v) require(**v > 0, "[constants] rates and prefactors must be positive");
    require(c.kappa >= 0 && c.f_coeff > 0, "[constants] kappa and f_coeff out of range");
    s.finish();
  }

  // [training]
  {
    Section s(top.table("training"), "training");
    auto& t = cfg.training;
    t.N = s.integer_or_plan("N");
    t.q = s.integer_or_plan("q");
    t.gamma = s.number_or_plan("gamma");
    t.t_eps = s.number_or_plan("t_eps");
    if (auto r = s.integer_or_plan("r")) t.r = static_cast<int>(*r);
    t.cap = s.integer("cap").value_or(100000);
    if (auto v = s.integer("mom_batches")) t.mom_batches = static_cast<int>(*v);
    if (auto v = s.integer("test_points")) t.test_points = static_cast<int>(*v);
    t.exact = s.boolean("exact").value_or(true);
    if (auto v = s.integers("sweep")) t.sweep = *v;
    require(!t.N || *t.N >= 1, "[training] N must be positive");
    require(!t.q || *t.q >= 1, "[training] q must be positive");
    require(!t.gamma || *t.gamma > 0, "[training] gamma must be positive");
    require(!t.t_eps || *t.t_eps > 0, "[training] t_eps must be positive");
    require(!t.r || *t.r >= 0, "[training] r must be non-negative");
    require(t.cap >= 1, "[training] cap must be positive");
    require(t.mom_batches >= 0, "[training] mom_batches must be non-negative");
    require(t.test_points >= 1, "[training] test_points must be positive");
    for (auto n : t.sweep) require(n >= 1, "[training] sweep sizes must be positive");
    s.finish();
  }

  // [diagnostics]
  {
    Section s(top.table("diagnostics"), "diagnostics");
    auto& d = cfg.diagnostics;
    d.observable = s.text("observable").value_or("Z0");
    d.params = s.text("params").value_or("random");
    require(d.params == "random" || d.params == "zeros", "[diagnostics] params must be random or zeros");
    d.lr_time = s.number("lr_time").value_or(1.0);
    require(d.lr_time >= 0, "[diagnostics] lr_time must be non-negative");
    if (auto v = s.integer("r_max")) d.r_max = static_cast<int>(*v);
    if (auto v = s.numbers("t_grid")) d.t_grid = *v;
    if (auto v = s.integers("s_grid")) d.s_grid = to_ints(*v);
    if (auto v = s.integers("A")) d.A = to_ints(*v);
    if (auto v = s.integers("R")) d.R = to_ints(*v);
    if (auto v = s.integers("W")) d.W = to_ints(*v);
    d.shift = s.number("shift").value_or(0.5);
    require(d.shift >= 0 && d.shift <= 1, "[diagnostics] shift must lie in [0, 1]");
    if (auto v = s.numbers("stability_times")) d.stability_times = *v;
    require(!d.stability_times.empty(), "[diagnostics] stability_times must not be empty");
    s.finish();
    try {
      parse_pauli_observable(d.observable, lat);
    } catch (const std::logic_error& e) {
      throw ConfigError(std::string("[diagnostics] ") + e.what());
    }
    const bool any = !d.A.empty() || !d.R.empty() || !d.W.empty();
    if (any) {
      require(!d.A.empty() && !d.R.empty() && !d.W.empty(), "[diagnostics] A, R and W must be given together");
      try {
        check_nesting(lat, Region::of(d.A), Region::of(d.R), Region::of(d.W));
      } catch (const std::logic_error& e) {
        throw ConfigError(std::string("[diagnostics] ") + e.what());
      }
    }
  }
  top.finish();
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) { return config_from_json(parse_toml(text)); }

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace phaselearn
