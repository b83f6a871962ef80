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

#include <chrono>
#include <cmath>
#include <vector>

#include "mlr/chebyshev.hpp"
#include "mlr/fit.hpp"
#include "mlr/geometry.hpp"
#include "mlr/model.hpp"
#include "mlr/parallel.hpp"
#include "mlr/probes.hpp"
#include "mlr/quantize.hpp"

namespace mlr {

// Largest group velocity over the momenta whose energy lies in [lo, hi].
inline double max_speed_in(const Stencil& st, EnergyInterval window, long grid_n = 1024) {
  double vmax = 0.0;
  detail::for_each_torus_point(st.dim(), grid_n, [&](std::span<const double> xi) {
    double e = st.p0(xi);
    if (e >= window.lo && e <= window.hi) vmax = std::max(vmax, euclidean_norm(st.velocity(xi)));
  });
  return vmax;
}

struct TimeRow {
  double h = 1.0;
  int radius = 0;
  double t = 0.0;
  double norm = 0.0;
  std::size_t chebyshev_terms = 0;
  int iterations = 0;
  double seconds = 0.0;
};

struct LocalDecayOptions {
  int radius = 512;
  double reflection_fraction = 0.8;
  double tol = 1e-10;
  NormOptions norm{};
  int jobs = 1;
};

struct LocalDecayResult {
  std::vector<TimeRow> rows;
  DecayFit fit;  // log norm against log <t> over the second half of the grid
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double window = 0.0;  // largest admissible t
};

// || <n>^{-nu} e^{-itH} f(H) <n>^{-nu} || on the CAP-free box, for t inside
// the window before the fastest energy-localized wave reaches the wall.
inline LocalDecayResult local_decay_probe(const Model& model, const EnergyCutoff& cutoff, double nu,
                                          const std::vector<double>& t_grid, const LocalDecayOptions& opt = {}) {
  if (t_grid.size() < 2) throw PreconditionError("local_decay_probe needs at least two times");
  if (nu < 0.0) throw PreconditionError("local_decay_probe needs nu >= 0");
  LocalDecayResult out;
  double vmax = max_speed_in(model.stencil, cutoff.support());
  out.window = vmax > 0.0 ? opt.reflection_fraction * opt.radius / vmax : INFINITY;
  for (double t : t_grid) {
    if (t < 0.0) throw PreconditionError("local_decay_probe needs t >= 0");
    if (t > out.window)
      throw PreconditionError("time " + std::to_string(t) + " is past the reflection window " +
                              std::to_string(out.window) + "; enlarge the box");
  }
  Hamiltonian h = model.hamiltonian(opt.radius, false);
  const Box& box = h.box();
  auto w = position_weight(-nu, box);
  auto f = function_map(h, cutoff, opt.tol);
  const auto enc = enclosure_of(h);
  out.rows.resize(t_grid.size());
  parallel_for(t_grid.size(), opt.jobs, [&](std::size_t k) {
    auto t0 = std::chrono::steady_clock::now();
    const double t = t_grid[k];
    auto est = operator_norm(compose({w, propagator(h, t, opt.tol), f, w}), opt.norm);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::size_t terms = t == 0.0 ? 0 : ChebyshevPlan::exponential(t, enc, opt.tol).terms();
    out.rows[k] = TimeRow{1.0, opt.radius, t, est.value, terms, est.iterations, secs};
  });
  std::vector<double> xs, ys;
  for (std::size_t k = std::min(t_grid.size() / 2, t_grid.size() - 2); k < t_grid.size(); ++k) {
    xs.push_back(std::sqrt(1.0 + t_grid[k] * t_grid[k]));
    ys.push_back(out.rows[k].norm);
  }
  out.fit = DecayFit::loglog(xs, ys, std::min<std::size_t>(4, xs.size()));
  out.kappa = -out.fit.slope;
  return out;
}

inline std::vector<double> log_time_grid(double t_min, double t_max, int points) {
  if (!(t_min > 0.0 && t_max > t_min && points >= 2))
    throw PreconditionError("log time grid needs 0 < t_min < t_max and two points");
  std::vector<double> t(points);
  for (int i = 0; i < points; ++i)
    t[i] = t_min * std::pow(t_max / t_min, static_cast<double>(i) / (points - 1));
  return t;
}

struct PropagationOptions {
  double delta1 = 0.2;
  double delta2 = 0.2;
  double eps_f = 0.2;
  Expectation expectation = Expectation::decay;
  bool require_on_shell = true;
  double horizon_exponent = 2.0;  // T(h) = h^{-horizon_exponent}
  double reflection_fraction = 0.8;
  int time_points = 32;
  int min_radius = 64;
  int max_radius = 4096;
  double tol = 1e-10;
  double shell_tol = 1e-8;
  long classify_grid = 4096;
  NormOptions norm{};
  QuantizeOptions quantize{};
  int jobs = 1;
};

struct PropagationResult {
  MembershipReport classification;
  std::vector<TimeRow> rows;    // every (h, t)
  std::vector<ProbeRow> sup;    // per h, sup over the grid
  DecayFit fit;                 // sup norm against h
};

// sup_t || Op^h(a1) e^{-itH} f(H) Op^h(a2) || over t in {0} and a log grid
// in [1, T(h)], T(h) = min(h^{-2}, 0.8 L / v_max), with a1 at (x, xi)
// and a2 at (-y, eta).
inline PropagationResult propagation_probe(const Model& model, const KernelPoint& kp, double lambda,
                                           const std::vector<double>& h_list,
                                           const PropagationOptions& opt = {}) {
  if (h_list.empty()) throw PreconditionError("propagation_probe needs at least one h");
  PropagationResult out;
  out.classification = classify(kp, model.stencil, lambda, 3.0 * opt.delta1, opt.classify_grid);
  if (opt.expectation == Expectation::decay && !out.classification.outside_all(+1))
    throw PreconditionError("propagation_probe: kernel point meets Sigma_0, Sigma_+ or Sigma'_+");
  if (opt.expectation == Expectation::control && out.classification.outside_all(+1))
    throw PreconditionError("propagation_probe: control point is not on a singular set");
  if (opt.require_on_shell &&
      (std::fabs(model.stencil.p0(kp.xi) - lambda) > opt.shell_tol ||
       std::fabs(model.stencil.p0(kp.eta) - lambda) > opt.shell_tol))
    throw PreconditionError("propagation_probe: both momenta must lie on the energy shell");

  EnergyCutoff cutoff(lambda, opt.eps_f);
  const double vmax = max_speed_in(model.stencil, cutoff.support());
  Point minus_y(kp.y.size());
  for (std::size_t i = 0; i < kp.y.size(); ++i) minus_y[i] = -kp.y[i];
  auto [b1, b2] = make_bump_pair(kp.x, kp.xi, minus_y, kp.eta, opt.delta1, opt.delta2);

  // One box for every h, sized by the rule at the smallest h: the bumps
  // at the larger h are then resolved as well.
  const double h_min = *std::min_element(h_list.begin(), h_list.end());
  const int radius = std::max(opt.min_radius, wf_box_radius(kp, h_min));
  if (radius > opt.max_radius)
    throw PreconditionError("propagation_probe: box radius " + std::to_string(radius) + " exceeds the limit");
  Hamiltonian h = model.hamiltonian(radius, false);
  auto f = function_map(h, cutoff, opt.tol);
  for (double hh : h_list) {
    const double horizon = std::min(std::pow(hh, -opt.horizon_exponent),
                                    vmax > 0.0 ? opt.reflection_fraction * radius / vmax : INFINITY);
    std::vector<double> ts{0.0};
    if (horizon > 1.0) {
      auto g = log_time_grid(1.0, horizon, opt.time_points);
      ts.insert(ts.end(), g.begin(), g.end());
    }
    auto a1 = op_h(b1, hh, h.box(), opt.quantize);
    auto a2 = op_h(b2, hh, h.box(), opt.quantize);
    auto fa2 = compose(f, a2);
    const auto enc = enclosure_of(h);
    std::vector<TimeRow> rows(ts.size());
    parallel_for(ts.size(), opt.jobs, [&](std::size_t k) {
      auto t0 = std::chrono::steady_clock::now();
      auto est = operator_norm(compose({a1, propagator(h, ts[k], opt.tol), fa2}), opt.norm);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::size_t terms = ts[k] == 0.0 ? 0 : ChebyshevPlan::exponential(ts[k], enc, opt.tol).terms();
      rows[k] = TimeRow{hh, radius, ts[k], est.value, terms, est.iterations, secs};
    });
    ProbeRow best{hh, radius, 0.0, 0.0, 0, 0.0};
    for (const auto& r : rows) {
      best.seconds += r.seconds;
      if (r.norm >= best.norm) {
        best.norm = r.norm;
        best.iterations = r.iterations;
      }
    }
    out.sup.push_back(best);
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  std::vector<double> xs, ys;
  for (const auto& r : out.sup) {
    xs.push_back(r.h);
    ys.push_back(r.norm);
  }
  out.fit = DecayFit::loglog(xs, ys, std::min<std::size_t>(4, xs.size()));
  return out;
}

struct SplittingReport {
  double head_exponent = 0.0;     // from sup-norm ~ h^N over [0, T]
  double tail_exponent = 0.0;     // from local decay over [T, inf)
  double implied_exponent = 0.0;  // the smaller of the two
  double horizon_exponent = 0.0;  // T = h^{-horizon_exponent}
  bool inconclusive = false;      // kappa <= 1: the tail integral diverges
  bool nonpositive = false;       // implied exponent <= 0
};

// Splits the time integral of the propagator sandwich at T = h^{-(M + 2 nu)}.
// The head contributes h^N T, the tail h^{-2 nu} T^{1 - kappa} (the weights
// cost h^{-nu} on each side), so the bound is h^{min(head, tail)}.
inline SplittingReport t_splitting_bound(double slope_prop, double kappa, double nu, double M) {
  if (!std::isfinite(slope_prop) || !std::isfinite(kappa))
    throw PreconditionError("t_splitting_bound needs both fitted exponents");
  SplittingReport r;
  r.horizon_exponent = M + 2.0 * nu;
  r.head_exponent = slope_prop - r.horizon_exponent;
  r.tail_exponent = r.horizon_exponent * (kappa - 1.0) - 2.0 * nu;
  r.implied_exponent = std::min(r.head_exponent, r.tail_exponent);
  r.inconclusive = kappa <= 1.0;
  r.nonpositive = r.implied_exponent <= 0.0;
  return r;
}

inline SplittingReport t_splitting_bound(const DecayFit& propagation, const DecayFit& local_decay, double nu,
                                         double M) {
  if (propagation.degenerate || local_decay.degenerate)
    throw PreconditionError("t_splitting_bound needs non-degenerate fits");
  return t_splitting_bound(propagation.slope, -local_decay.slope, nu, M);
}

}  // namespace mlr
