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
#include <limits>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "phaselearn/lattice.hpp"
#include "phaselearn/lindblad.hpp"

namespace phaselearn {

/// Scans form full superoperators and are limited to this many sites.
inline constexpr int kScanSiteCap = 8;
/// Values at or below this are treated as exact zeros by fits.
inline constexpr double kFitFloor = 1e-12;

std::vector<double> default_time_grid();

struct DecayPoint {
  double abscissa = 0.0;
  double value = 0.0;
  double error = 0.0;
  bool excluded = false;
  std::string note;
};

/// Log-linear fit value ~ prefactor * exp(-rate * abscissa).
struct DecayFit {
  std::string abscissa_label;
  std::vector<DecayPoint> points;
  double rate = 0.0;
  double prefactor = 0.0;
  double r_squared = 1.0;
  double rate_ci_low = 0.0;
  double rate_ci_high = 0.0;
  int fitted_points = 0;
  bool pass = false;
  /// Upper envelope per point (NaN where it does not apply).
  std::vector<double> envelope;
  bool has_envelope = false;
  bool envelope_valid = true;

  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;
};

struct FitOptions {
  int bootstrap = 200;
  std::uint64_t seed = 0;
  /// Only abscissae in [fit_from, fit_to] enter the fit.
  double fit_from = -std::numeric_limits<double>::infinity();
  double fit_to = std::numeric_limits<double>::infinity();
};

/// Weighted least squares on log(value) with weights value^2, using points
/// above kFitFloor. Fewer than two such points give rate = inf (the curve
/// vanishes) and a pass. Bootstrap percentiles give the 95% interval.
DecayFit fit_decay(std::string label, std::vector<DecayPoint> points, const FitOptions& opt = {});

/// Sets envelope values and the validity flag (value <= envelope + tol).
void attach_envelope(DecayFit& fit, std::vector<double> envelope, double tol = 1e-12);

/// Constants used by envelope overlays.
struct EnvelopeConstants {
  double mu = 1.0;            // spatial decay rate of the interaction norm
  double gamma_prime = 1.0;   // local mixing rate
  /// Prefactor c'|A|^kappa of the local mixing envelope.
  double poly_A = 1.0;
};

/// Lieb-Robinson velocity 2 max_u sum_{j touching u} J_j |b(r_j)| e^{mu r_j}.
double lieb_robinson_velocity(const ParamLindbladian& family, double mu);

struct ScanOptions {
  int workers = 1;
  FitOptions fit;
  OdeOptions ode;
  EnvelopeConstants constants;
};

/// ||T*_t(O) - T*^{A(r)}_t(O)|| for r = 0..r_max, where L^{A(r)} keeps x on
/// terms inside supp(O)(r) and x' elsewhere.
DecayFit lieb_robinson_scan(const ParamLindbladian& family, const ParamVector& x,
                            const ParamVector& x_prime, const LocalObservable& op, double t,
                            int r_max, const ScanOptions& opt = {});

/// |tr[O (T_t(rho0) - rho_inf)]| over the time grid.
DecayFit mixing_scan(const ParamLindbladian& family, const ParamVector& x, const CMatrix& rho0,
                     const LocalObservable& op, std::vector<double> t_grid,
                     const ScanOptions& opt = {});

/// |tr[O (rho_inf - rho_inf^{A(s)})]| over s.
DecayFit ltqo_scan(const ParamLindbladian& family, const ParamVector& x, const ParamVector& x_prime,
                   const LocalObservable& op, std::vector<int> s_grid, const ScanOptions& opt = {});

/// Checks A inside R away from its inner boundary, and the same for R in W.
void check_nesting(const Lattice& lattice, const Region& A, const Region& R, const Region& W);

/// || tr_{A^c}[ e^{t L_R}(rho_inf^W) - rho_inf^R ] ||_1 over the time grid,
/// where L_S keeps x on terms inside S and x' elsewhere.
DecayFit compatibility_scan(const ParamLindbladian& family, const ParamVector& x,
                            const ParamVector& x_prime, const Region& A, const Region& R,
                            const Region& W, std::vector<double> t_grid,
                            const ScanOptions& opt = {});

/// Bound 2|dh| + 2 sum_k |dL_k| (|L_k| + |L'_k|) on the perturbation norm.
double perturbation_norm(const LocalGenerator& a, const LocalGenerator& b);

struct StabilityOptions {
  /// Shift applied to the first coordinate of the perturbed term.
  double shift = 0.5;
  /// Evaluation times; the scan reports the maximum over them.
  std::vector<double> times{1.0, 2.0, 4.0};
};

/// max_t |f_O(L, t) - f_O(L + E_d, t)| with f_O(L, t) = tr[O e^{tL}(rho*)]
/// and E_d a shift of one term at distance d from supp(O).
DecayFit stability_scan(const ParamLindbladian& family, const ParamVector& x,
                        const LocalObservable& op, const CMatrix& rho_ref,
                        const StabilityOptions& stab, const ScanOptions& opt = {});

}  // namespace phaselearn
