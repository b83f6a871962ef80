/*
 *            Copyright 2026 The mlr Development Team
 *
 *      Licensed under the Apache License, Version 2.0 (the "License")
 *
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *              http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mlr/escape.hpp"
#include "mlr/probes.hpp"
#include "mlr/propagate.hpp"
#include "runner/config.hpp"

namespace mlr::runner {

// One line of results.csv.  The column order is fixed:
//   probe,series,h,radius,t,epsilon,value,iterations,seconds
// Only `seconds` varies between identical runs.
struct Row {
  std::string series;
  double h = std::numeric_limits<double>::quiet_NaN();
  double radius = std::numeric_limits<double>::quiet_NaN();
  double t = std::numeric_limits<double>::quiet_NaN();
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double value = std::numeric_limits<double>::quiet_NaN();
  long iterations = 0;
  double seconds = 0.0;
};

inline const char* csv_header() { return "probe,series,h,radius,t,epsilon,value,iterations,seconds"; }

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Outcome {
  std::vector<Row> rows;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<Verdict> verdicts;
};

enum ExitCode { exit_ok = 0, exit_criterion = 1, exit_config = 2, exit_numerical = 3 };

inline Model build_model(const Config& c) {
  const int d = static_cast<int>(c.integer("model", "dim"));
  Model m;
  m.stencil = Stencil::laplacian(d);
  const auto& pot = c.text("model", "potential");
  const double amp = c.real("model", "amplitude"), mu = c.real("model", "mu");
  m.potential = pot == "zero" ? Potential::zero() : pot == "dipole" ? Potential::dipole(amp, mu)
                                                                   : Potential::power_law(amp, mu);
  m.cap_fraction = c.real("model", "cap_fraction");
  m.cap_strength = c.real("model", "cap_strength");
  m.boundary = c.text("model", "boundary") == "periodic" ? Boundary::periodic : Boundary::dirichlet;
  return m;
}

namespace detail {

constexpr double na = std::numeric_limits<double>::quiet_NaN();

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

inline LAPConfig lap_config(const Config& c) {
  LAPConfig lap;
  lap.lambda = c.real("probe", "lambda");
  lap.epsilons = default_epsilons(static_cast<int>(c.integer("numerics", "eps_first")),
                                  static_cast<int>(c.integer("numerics", "eps_last")));
  lap.convergence_tol = c.real("numerics", "lap_tol");
  if (c.has("probe", "branch")) lap.branch = c.text("probe", "branch") == "minus" ? Branch::minus : Branch::plus;
  const auto& s = c.text("numerics", "solver");
  lap.solver = s == "banded" ? SolverKind::banded
               : s == "dense" ? SolverKind::dense
               : s == "iterative" ? SolverKind::iterative
                                  : SolverKind::automatic;
  return lap;
}

inline NormOptions norm_options(const Config& c) {
  NormOptions n;
  n.tol = c.real("numerics", "norm_tol");
  n.max_iter = static_cast<int>(c.integer("numerics", "norm_max_iter"));
  n.seed = static_cast<std::uint64_t>(c.integer("numerics", "seed"));
  return n;
}

inline QuantizeOptions quantize_options(const Config& c) {
  QuantizeOptions q;
  const auto& r = c.text("numerics", "resolution");
  q.resolution = r == "off" ? ResolutionPolicy::off : r == "warn_only" ? ResolutionPolicy::warn_only
                                                                       : ResolutionPolicy::enforce;
  return q;
}

inline Expectation expectation(const Config& c) {
  const auto& e = c.text("probe", "expectation");
  return e == "control" ? Expectation::control : e == "unchecked" ? Expectation::unchecked : Expectation::decay;
}

inline KernelPoint kernel_point(const Config& c) {
  return KernelPoint(c.list("probe", "x"), c.list("probe", "xi"), c.list("probe", "y"), c.list("probe", "eta"));
}

inline std::vector<int> radii(const Config& c) {
  std::vector<int> r;
  for (double v : c.list("probe", "radii")) r.push_back(static_cast<int>(v));
  return r;
}

inline ConeProbeOptions cone_options(const Config& c) {
  ConeProbeOptions o;
  o.r0 = c.real("probe", "r0");
  o.window_half_width = c.real("probe", "window_half_width");
  o.taper = c.flag("probe", "taper");
  o.bounded_factor = c.real("probe", "bounded_factor");
  o.quantize = quantize_options(c);
  o.lap = lap_config(c);
  o.norm = norm_options(c);
  o.jobs = static_cast<int>(c.integer("numerics", "jobs"));
  return o;
}

inline nlohmann::ordered_json fit_json(const DecayFit& f) {
  nlohmann::ordered_json j;
  j["degenerate"] = f.degenerate;
  j["slope"] = f.degenerate ? nlohmann::ordered_json() : nlohmann::ordered_json(f.slope);
  j["intercept"] = f.degenerate ? nlohmann::ordered_json() : nlohmann::ordered_json(f.intercept);
  j["max_residual"] = f.degenerate ? nlohmann::ordered_json() : nlohmann::ordered_json(f.max_residual);
  return j;
}

inline nlohmann::ordered_json classification_json(const MembershipReport& r) {
  return {{"sigma0", r.in_sigma0},       {"sigma_plus", r.in_sigma_plus},
          {"sigma_minus", r.in_sigma_minus}, {"sigma_prime_plus", r.in_sigma_prime_plus},
          {"sigma_prime_minus", r.in_sigma_prime_minus}, {"d_sigma0", r.d_sigma0},
          {"d_sigma_plus", r.d_sigma_plus}, {"d_sigma_prime_plus", r.d_sigma_prime_plus}, {"tol", r.tol}};
}

// Declared criteria against the measured quantities.  A degenerate fit
// (an exactly vanishing norm) counts as infinitely fast decay.
inline void judge_slope(const Config& c, const DecayFit& f, Outcome& out) {
  const double slope = f.degenerate ? std::numeric_limits<double>::infinity() : f.slope;
  if (c.has("criteria", "min_slope")) {
    double lim = c.real("criteria", "min_slope");
    out.verdicts.push_back({"min_slope", slope >= lim, "slope " + fmt(slope) + " vs >= " + fmt(lim)});
  }
  if (c.has("criteria", "max_slope")) {
    double lim = c.real("criteria", "max_slope");
    out.verdicts.push_back({"max_slope", slope <= lim, "slope " + fmt(slope) + " vs <= " + fmt(lim)});
  }
  if (c.has("criteria", "max_residual")) {
    double lim = c.real("criteria", "max_residual");
    double r = f.degenerate ? 0.0 : f.max_residual;
    out.verdicts.push_back({"max_residual", r <= lim, "residual " + fmt(r) + " vs <= " + fmt(lim)});
  }
}

inline void run_wf(const Config& c, const Model& m, Outcome& out) {
  WfProbeOptions o;
  o.delta1 = c.real("probe", "delta1");
  o.delta2 = c.real("probe", "delta2");
  o.expectation = expectation(c);
  o.min_radius = static_cast<int>(c.integer("probe", "min_radius"));
  o.max_radius = static_cast<int>(c.integer("probe", "max_radius"));
  o.classify_grid = c.integer("numerics", "classify_grid");
  o.lap = lap_config(c);
  o.norm = norm_options(c);
  o.quantize = quantize_options(c);
  o.jobs = static_cast<int>(c.integer("numerics", "jobs"));
  auto r = wf_probe(m, kernel_point(c), c.real("probe", "lambda"), c.list("probe", "h_list"), o);
  for (const auto& p : r.rows) out.rows.push_back({"norm", p.h, double(p.radius), na, p.epsilon, p.norm, p.iterations, p.seconds});
  out.summary["classification"] = classification_json(r.classification);
  out.summary["fit"] = fit_json(r.fit);
  judge_slope(c, r.fit, out);
}

inline void judge_ratio(const Config& c, const ConeProbeResult& r, Outcome& out) {
  out.summary["ratio"] = r.ratio;
  out.summary["bounded"] = r.bounded;
  if (c.has("criteria", "max_ratio")) {
    double lim = c.real("criteria", "max_ratio");
    out.verdicts.push_back({"max_ratio", r.ratio <= lim, "ratio " + fmt(r.ratio) + " vs <= " + fmt(lim)});
  }
}

inline void cone_rows(const ConeProbeResult& r, Outcome& out) {
  for (const auto& p : r.rows) {
    out.rows.push_back({"norm", na, double(p.radius), na, p.epsilon, p.norm, p.iterations, p.seconds});
    if (!std::isnan(p.control)) out.rows.push_back({"control", na, double(p.radius), na, p.epsilon, p.control, 0, 0.0});
  }
}

inline void run_ik(const Config& c, const Model& m, Outcome& out) {
  auto r = ik_probe(m, c.real("probe", "lambda"), c.real("probe", "gamma_minus"), c.real("probe", "gamma_plus"),
                    c.real("probe", "weight"), radii(c), cone_options(c));
  cone_rows(r, out);
  judge_ratio(c, r, out);
}

inline void run_one_sided(const Config& c, const Model& m, Outcome& out) {
  auto r = one_sided_probe(m, c.real("probe", "lambda"), c.real("probe", "gamma"), c.real("probe", "nu"),
                           c.real("probe", "s"), radii(c), cone_options(c));
  cone_rows(r, out);
  judge_ratio(c, r, out);
}

inline void run_local_decay(const Config& c, const Model& m, Outcome& out) {
  LocalDecayOptions o;
  o.radius = static_cast<int>(c.integer("probe", "radius"));
  o.reflection_fraction = c.real("probe", "reflection_fraction");
  o.tol = c.real("numerics", "chebyshev_tol");
  o.norm = norm_options(c);
  o.jobs = static_cast<int>(c.integer("numerics", "jobs"));
  EnergyCutoff cutoff(c.real("probe", "lambda"), c.real("probe", "eps_f"));
  auto grid = log_time_grid(c.real("probe", "t_min"), c.real("probe", "t_max"),
                            static_cast<int>(c.integer("probe", "t_points")));
  auto r = local_decay_probe(m, cutoff, c.real("probe", "nu"), grid, o);
  for (const auto& p : r.rows) out.rows.push_back({"norm", na, double(p.radius), p.t, na, p.norm, p.iterations, p.seconds});
  out.summary["fit"] = fit_json(r.fit);
  out.summary["kappa"] = r.kappa;
  out.summary["window"] = r.window;
  if (c.has("criteria", "min_kappa")) {
    double lim = c.real("criteria", "min_kappa");
    out.verdicts.push_back({"min_kappa", r.kappa >= lim, "kappa " + fmt(r.kappa) + " vs >= " + fmt(lim)});
  }
}

inline void run_prop(const Config& c, const Model& m, Outcome& out) {
  PropagationOptions o;
  o.delta1 = c.real("probe", "delta1");
  o.delta2 = c.real("probe", "delta2");
  o.eps_f = c.real("probe", "eps_f");
  o.expectation = expectation(c);
  o.horizon_exponent = c.real("probe", "horizon_exponent");
  o.reflection_fraction = c.real("probe", "reflection_fraction");
  o.time_points = static_cast<int>(c.integer("probe", "time_points"));
  o.min_radius = static_cast<int>(c.integer("probe", "min_radius"));
  o.max_radius = static_cast<int>(c.integer("probe", "max_radius"));
  o.tol = c.real("numerics", "chebyshev_tol");
  o.classify_grid = c.integer("numerics", "classify_grid");
  o.norm = norm_options(c);
  o.quantize = quantize_options(c);
  o.jobs = static_cast<int>(c.integer("numerics", "jobs"));
  auto r = propagation_probe(m, kernel_point(c), c.real("probe", "lambda"), c.list("probe", "h_list"), o);
  for (const auto& p : r.rows) out.rows.push_back({"norm", p.h, double(p.radius), p.t, na, p.norm, p.iterations, p.seconds});
  for (const auto& p : r.sup) out.rows.push_back({"sup", p.h, double(p.radius), na, na, p.norm, 0, 0.0});
  out.summary["classification"] = classification_json(r.classification);
  out.summary["fit"] = fit_json(r.fit);
  judge_slope(c, r.fit, out);
}

inline void run_escape(const Config& c, const Model& m, Outcome& out) {
  auto t0 = std::chrono::steady_clock::now();
  auto since = [&] {  // seconds since the previous row
    auto now = std::chrono::steady_clock::now();
    double s = std::chrono::duration<double>(now - t0).count();
    t0 = now;
    return s;
  };
  const int depth = static_cast<int>(c.integer("probe", "depth"));
  EscapeLadder l = EscapeLadder::standard(depth, c.real("model", "mu"));
  l.stencil = m.stencil;
  l.x2 = c.list("probe", "x2");
  l.xi2 = c.list("probe", "xi2");
  l.delta1 = c.real("probe", "delta1");
  l.delta2 = c.real("probe", "delta2");
  l.h = c.real("probe", "h");
  l.constants = c.list("probe", "constants");
  TransportGrid grid;
  grid.seed = static_cast<std::uint64_t>(c.integer("numerics", "seed"));

  bool transport_ok = true;
  for (int j = 0; j <= depth; ++j) {
    auto r = verify_transport(l, j, grid);
    transport_ok &= r.pass && r.fd_mismatch < 1e-6;
    out.rows.push_back({"transport_j" + std::to_string(j), l.h, na, r.t_at, na, r.min_margin, r.points, since()});
    out.summary["transport"].push_back({{"j", j}, {"min", r.min_margin}, {"fd_mismatch", r.fd_mismatch}, {"pass", r.pass}});
  }
  EscapeLadder bad = EscapeLadder::standard(0, l.mu);
  bad.stencil = l.stencil;
  bad.x2 = l.x2;
  bad.xi2 = l.xi2;
  bad.delta1 = l.delta1;
  bad.delta2 = c.real("probe", "control_delta2");
  bad.h = l.h;
  auto control = verify_transport(bad, 0, grid, false);
  out.rows.push_back({"control_j0", bad.h, na, control.t_at, na, control.min_margin, control.points, since()});

  Model ring = Model::free(1);
  ring.boundary = Boundary::periodic;
  const int radius = static_cast<int>(c.integer("probe", "energy_radius"));
  EscapeLadder e = EscapeLadder::standard(0, ring.potential.mu());
  e.x2 = l.x2;
  e.xi2 = l.xi2;
  e.delta1 = c.real("probe", "energy_delta1");
  e.delta2 = c.real("probe", "energy_delta2");
  e.period = 2.0 * radius + 1.0;
  e.check_separation = false;
  EnergyCheckOptions eo;
  eo.h_list = c.list("probe", "energy_h_list");
  eo.t_samples = c.list("probe", "energy_t");
  eo.validate = false;
  eo.required_exponent = required_energy_exponent(c.real("probe", "n_target"), ring.potential.mu());
  eo.quantize = quantize_options(c);
  if (eo.quantize.resolution == ResolutionPolicy::enforce) eo.quantize.resolution = ResolutionPolicy::warn_only;
  eo.jobs = static_cast<int>(c.integer("numerics", "jobs"));
  auto energy = energy_inequality_check(ring, radius, e, eo);
  for (const auto& r : energy.rows) out.rows.push_back({"lambda_min", r.h, double(radius), r.t, na, r.lambda_min, 0, 0.0});
  out.summary["energy"] = {{"exponent", energy.exponent},     {"required", eo.required_exponent},
                           {"bound_c", energy.bound_c},       {"bound_p", energy.bound_p},
                           {"fit", fit_json(energy.fit)}};

  auto mono = monotonicity_check(ring, radius, e.at(c.real("probe", "monotonicity_h")), c.list("probe", "monotonicity_t"),
                                 energy.bound_c, energy.bound_p, eo.quantize);
  for (const auto& r : mono.rows) out.rows.push_back({"margin", r.h, double(radius), r.t, na, r.margin, 0, 0.0});

  if (c.has("criteria", "transport") && c.flag("criteria", "transport"))
    out.verdicts.push_back({"transport", transport_ok, "steps 0.." + std::to_string(depth)});
  if (c.has("criteria", "control_fails") && c.flag("criteria", "control_fails"))
    out.verdicts.push_back({"control_fails", control.min_margin < 0.0, "control min " + fmt(control.min_margin)});
  if (c.has("criteria", "min_energy_exponent")) {
    double lim = c.real("criteria", "min_energy_exponent");
    out.verdicts.push_back({"min_energy_exponent", energy.exponent >= lim,
                            "exponent " + fmt(energy.exponent) + " vs >= " + fmt(lim)});
  }
  if (c.has("criteria", "monotonicity") && c.flag("criteria", "monotonicity")) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : mono.rows) worst = std::min(worst, r.margin);
    out.verdicts.push_back({"monotonicity", mono.pass, "worst margin " + fmt(worst)});
  }
}

inline void run_free_kernel(const Config& c, Outcome& out) {
  auto t0 = std::chrono::steady_clock::now();
  auto r = free_kernel_probe(static_cast<int>(c.integer("probe", "radius")), lap_config(c));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.rows.push_back({"relative_error", na, double(r.radius), na, r.epsilon, r.relative_error, r.sites, secs});
  out.summary["relative_error"] = r.relative_error;
  if (c.has("criteria", "max_error")) {
    double lim = c.real("criteria", "max_error");
    out.verdicts.push_back({"max_error", r.relative_error <= lim,
                            "error " + fmt(r.relative_error) + " vs <= " + fmt(lim)});
  }
}

}  // namespace detail

// Runs the probe of a validated config.  Throws what the probe throws.
inline Outcome execute(const Config& c) {
  Model m = build_model(c);
  Outcome out;
  const auto& k = c.kind();
  if (k == "wf") detail::run_wf(c, m, out);
  else if (k == "ik") detail::run_ik(c, m, out);
  else if (k == "one-sided") detail::run_one_sided(c, m, out);
  else if (k == "local-decay") detail::run_local_decay(c, m, out);
  else if (k == "prop31") detail::run_prop(c, m, out);
  else if (k == "escape") detail::run_escape(c, m, out);
  else if (k == "free-kernel") detail::run_free_kernel(c, out);
  return out;
}

inline std::string format_csv(const std::string& probe, const std::vector<Row>& rows) {
  std::string s = std::string(csv_header()) + "\n";
  auto num = [](double v) {
    if (std::isnan(v)) return std::string();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : rows)
    s += probe + "," + r.series + "," + num(r.h) + "," + num(r.radius) + "," + num(r.t) + "," + num(r.epsilon) + "," +
         num(r.value) + "," + std::to_string(r.iterations) + "," + num(r.seconds) + "\n";
  return s;
}

inline nlohmann::ordered_json manifest(const Config& c, const Outcome& o, int exit_code, const std::string& error) {
  nlohmann::ordered_json j;
  j["version"] = MLR_VERSION;
  j["probe"] = c.kind();
  for (const auto& [section, keys] : c.resolved())
    for (const auto& [k, v] : keys) j["config"][section][k] = v;
  j["columns"] = csv_header();
  j["summary"] = o.summary;
  j["criteria"] = nlohmann::ordered_json::array();
  for (const auto& v : o.verdicts) j["criteria"].push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  j["exit_code"] = exit_code;
  if (!error.empty()) j["error"] = error;
  return j;
}

struct Overrides {
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<long> seed;
};

inline void apply(Config& c, const Overrides& o) {
  if (o.jobs) c.set("numerics", "jobs", std::to_string(*o.jobs));
  if (o.out) c.set("output", "dir", *o.out);
  if (o.seed) c.set("numerics", "seed", std::to_string(*o.seed));
}

// Parses, runs and writes results.csv and manifest.json.  Prints one
// PASS/FAIL line per declared criterion.  Returns the exit code.
inline int run_config_text(const std::string& text, const Overrides& ov, std::ostream& log) {
  Config c;
  try {
    c = Config::parse_text(text);
    apply(c, ov);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return exit_config;
  }
  Outcome out;
  int code = exit_ok;
  std::string error;
  try {
    out = execute(c);
  } catch (const PreconditionError& e) {
    error = e.what();
    code = exit_config;
  } catch (const std::exception& e) {
    error = e.what();
    code = exit_numerical;
  }
  if (code == exit_ok)
    for (const auto& v : out.verdicts)
      if (!v.pass) code = exit_criterion;

  namespace fs = std::filesystem;
  const fs::path dir = c.text("output", "dir");
  std::error_code ec;
  fs::create_directories(dir, ec);
  auto formats = c.words("output", "formats");
  auto wants = [&](const char* f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
  if (wants("csv") && code != exit_config) {
    std::ofstream f(dir / "results.csv");
    f << format_csv(c.kind(), out.rows);
    if (!f) {
      log << "error: cannot write " << (dir / "results.csv").string() << "\n";
      return exit_config;
    }
  }
  if (wants("json")) {
    std::ofstream f(dir / "manifest.json");
    f << manifest(c, out, code, error).dump(2) << "\n";
    if (!f) {
      log << "error: cannot write " << (dir / "manifest.json").string() << "\n";
      return exit_config;
    }
  }
  if (!error.empty()) log << "error: " << error << "\n";
  for (const auto& v : out.verdicts) log << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
  return code;
}

inline int run_config_file(const std::string& path, const Overrides& ov, std::ostream& log) {
  std::ifstream in(path);
  if (!in) {
    log << "error: cannot read " << path << "\n";
    return exit_config;
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return run_config_text(text, ov, log);
}

}  // namespace mlr::runner
