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
#include <optional>
#include <string>
#include <vector>

#include "mlr/fit.hpp"
#include "mlr/geometry.hpp"
#include "mlr/model.hpp"
#include "mlr/parallel.hpp"
#include "mlr/quantize.hpp"
#include "mlr/resolvent.hpp"

namespace mlr {

// decay: the kernel point must avoid the singular sets; control: it must
// lie on one; unchecked: the classification is only reported.
enum class Expectation { decay, control, unchecked };

// Smallest box radius that keeps the scaled kernel point inside the
// CAP-free region at every h: L >= 4 max(|x|, |y|) / h_min.
inline int wf_box_radius(const KernelPoint& kp, double h_min) {
  double r = std::max(euclidean_norm(kp.x), euclidean_norm(kp.y));
  return static_cast<int>(std::ceil(4.0 * r / h_min));
}

struct WfProbeOptions {
  double delta1 = 0.2;
  double delta2 = 0.2;
  Expectation expectation = Expectation::decay;
  int radius = 0;  // 0: use the box rule
  int min_radius = 64;
  int max_radius = 4096;
  long classify_grid = 4096;
  LAPConfig lap{};
  NormOptions norm{};
  QuantizeOptions quantize{};
  int jobs = 1;
  // Replaces the bump pair (for degenerate-symbol checks).
  std::optional<std::pair<Symbol, Symbol>> symbols;
};

struct ProbeRow {
  double h = 0.0;
  int radius = 0;
  double epsilon = 0.0;
  double norm = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

struct WfProbeResult {
  MembershipReport classification;
  std::vector<ProbeRow> rows;
  DecayFit fit;
};

// h-decay of || Op^h(a1) R(lambda +- i0) Op^h(a2) || for bumps a1 at
// (x, xi) and a2 at (-y, eta).
inline WfProbeResult wf_probe(const Model& model, const KernelPoint& kp, double lambda,
                              const std::vector<double>& h_list, const WfProbeOptions& opt = {}) {
  if (h_list.empty()) throw PreconditionError("wf_probe needs at least one h");
  const int sign = branch_sign(opt.lap.branch);
  WfProbeResult out;
  out.classification = classify(kp, model.stencil, lambda, 3.0 * opt.delta1, opt.classify_grid);
  if (opt.expectation == Expectation::decay && !out.classification.outside_all(sign))
    throw PreconditionError(
        "wf_probe: kernel point is not outside Sigma_0, Sigma and Sigma' at tolerance 3 delta1");
  if (opt.expectation == Expectation::control && out.classification.outside_all(sign))
    throw PreconditionError("wf_probe: control point is not inside any of the singular sets");

  double h_min = *std::min_element(h_list.begin(), h_list.end());
  int need = wf_box_radius(kp, h_min);
  int radius = opt.radius ? opt.radius : std::max(need, opt.min_radius);
  if (radius < need)
    throw PreconditionError("wf_probe: box radius " + std::to_string(radius) + " is below the required " +
                            std::to_string(need));
  if (radius > opt.max_radius)
    throw PreconditionError("wf_probe: required box radius " + std::to_string(radius) + " exceeds the limit " +
                            std::to_string(opt.max_radius));

  LAPConfig lap = opt.lap;
  lap.lambda = lambda;
  Hamiltonian h = model.hamiltonian(radius, true);
  double eps = converged_epsilon(h, lap);

  Point minus_y(kp.y.size());
  for (std::size_t i = 0; i < kp.y.size(); ++i) minus_y[i] = -kp.y[i];
  auto symbols = opt.symbols ? *opt.symbols
                             : make_bump_pair(kp.x, kp.xi, minus_y, kp.eta, opt.delta1, opt.delta2);

  out.rows.resize(h_list.size());
  parallel_for(h_list.size(), opt.jobs, [&](std::size_t k) {
    const double hh = h_list[k];
    auto a1 = op_h(symbols.first, hh, h.box(), opt.quantize);
    auto a2 = op_h(symbols.second, hh, h.box(), opt.quantize);
    auto r = sandwich_norm(a1, h, lap, a2, opt.norm, eps);
    out.rows[k] = ProbeRow{hh, radius, r.epsilon, r.norm, r.iterations, r.seconds};
  });
  std::vector<double> xs, ys;
  for (const auto& r : out.rows) {
    xs.push_back(r.h);
    ys.push_back(r.norm);
  }
  out.fit = DecayFit::loglog(xs, ys, std::min<std::size_t>(4, xs.size()));
  return out;
}

struct ConeProbeOptions {
  double r0 = 4.0;
  double window_half_width = 0.4;  // energy cutoff supported in [lambda -+ this]
  bool taper = true;               // keep the cone symbols off the absorbing layer
  double bounded_factor = 1.2;
  // The energy factor of the cone symbols has a slowly decaying kernel, so
  // at L = 128 a few 1e-5 of its l2 mass wraps around the box.
  QuantizeOptions quantize{.resolution = ResolutionPolicy::warn_only};
  LAPConfig lap{};
  NormOptions norm{};
  int jobs = 1;
};

struct ConeProbeRow {
  int radius = 0;
  double epsilon = 0.0;
  double norm = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  double control = std::numeric_limits<double>::quiet_NaN();
};

struct ConeProbeResult {
  std::vector<ConeProbeRow> rows;
  double ratio = 0.0;  // largest over smallest norm
  bool bounded = false;
};

namespace detail {

inline ConeOptions cone_options(const Model& model, int radius, const ConeProbeOptions& opt) {
  ConeOptions c;
  c.r0 = opt.r0;
  // Phi(|x| / (L - w)) vanishes on the absorbing layer.  Without it the
  // cone operators reach into the CAP, where the reflected part of the
  // wave is not small and the weights amplify it.
  if (opt.taper) c.outer_taper = radius - model.cap(radius).width;
  return c;
}

inline ConeProbeResult finish(std::vector<ConeProbeRow> rows, double factor) {
  ConeProbeResult r;
  r.rows = std::move(rows);
  double mn = std::numeric_limits<double>::infinity(), mx = 0.0;
  for (const auto& row : r.rows) {
    mn = std::min(mn, row.norm);
    mx = std::max(mx, row.norm);
  }
  r.ratio = mn > 0.0 ? mx / mn : (mx == 0.0 ? 1.0 : INFINITY);
  r.bounded = r.ratio <= factor;
  return r;
}

}  // namespace detail

// || <n>^N A_- R(lambda + i0) A_+^* <n>^N || across box sizes, with A_+-
// the quantized cone symbols (outgoing cos >= gamma_plus, incoming
// cos <= gamma_minus).  The minus branch swaps the two sides.
inline ConeProbeResult ik_probe(const Model& model, double lambda, double gamma_minus, double gamma_plus,
                                double weight_order, const std::vector<int>& radii,
                                const ConeProbeOptions& opt = {}) {
  if (!(-1.0 < gamma_minus && gamma_minus < gamma_plus && gamma_plus < 1.0))
    throw PreconditionError("ik_probe needs -1 < gamma_minus < gamma_plus < 1");
  if (radii.empty()) throw PreconditionError("ik_probe needs at least one box radius");
  EnergyInterval window{lambda - opt.window_half_width, lambda + opt.window_half_width};
  LAPConfig lap = opt.lap;
  lap.lambda = lambda;
  const int s = branch_sign(lap.branch);
  std::vector<ConeProbeRow> rows(radii.size());
  parallel_for(radii.size(), opt.jobs, [&](std::size_t k) {
    auto t0 = std::chrono::steady_clock::now();
    const int radius = radii[k];
    Hamiltonian h = model.hamiltonian(radius, true);
    auto copt = detail::cone_options(model, radius, opt);
    auto a_out = make_cone_symbol(+1, gamma_plus, model.stencil, window, copt);
    auto a_in = make_cone_symbol(-1, gamma_minus, model.stencil, window, copt);
    const Box& box = h.box();
    auto in = op_h(a_in, 1.0, box, opt.quantize);
    auto out = op_h(a_out, 1.0, box, opt.quantize);
    const LinearMap& left = s > 0 ? in : out;
    const LinearMap& right = s > 0 ? out : in;
    auto w = position_weight(weight_order, box);
    double eps = converged_epsilon(h, lap);
    ShiftedSolver solver(h, lambda, eps, lap.branch, lap.solver, lap.krylov);
    auto res = solver.map();
    auto est = operator_norm(compose({w, left, res, right.adjoint(), w}), opt.norm);
    // control: the opposite order, without weights
    auto ctrl = operator_norm(compose({right, res, left.adjoint()}), opt.norm);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows[k] = ConeProbeRow{radius, eps, est.value, est.iterations, secs, ctrl.value};
  });
  return detail::finish(std::move(rows), opt.bounded_factor);
}

// || <n>^{-nu} R(lambda +- i0) Op(a_+-) <n>^{s} || across box sizes.
inline ConeProbeResult one_sided_probe(const Model& model, double lambda, double gamma, double nu,
                                       double s_order, const std::vector<int>& radii,
                                       const ConeProbeOptions& opt = {},
                                       std::optional<Symbol> custom_symbol = std::nullopt) {
  if (!(nu > 1.0)) throw PreconditionError("one_sided_probe needs nu > 1");
  if (!(s_order > 0.0 && s_order < nu - 1.0))
    throw PreconditionError("one_sided_probe needs 0 < s < nu - 1");
  if (radii.empty()) throw PreconditionError("one_sided_probe needs at least one box radius");
  EnergyInterval window{lambda - opt.window_half_width, lambda + opt.window_half_width};
  LAPConfig lap = opt.lap;
  lap.lambda = lambda;
  const int sign = branch_sign(lap.branch);
  std::vector<ConeProbeRow> rows(radii.size());
  parallel_for(radii.size(), opt.jobs, [&](std::size_t k) {
    auto t0 = std::chrono::steady_clock::now();
    const int radius = radii[k];
    Hamiltonian h = model.hamiltonian(radius, true);
    Symbol a = custom_symbol ? *custom_symbol
                             : make_cone_symbol(sign, gamma, model.stencil, window,
                                                detail::cone_options(model, radius, opt));
    const Box& box = h.box();
    double eps = converged_epsilon(h, lap);
    ShiftedSolver solver(h, lambda, eps, lap.branch, lap.solver, lap.krylov);
    auto est = operator_norm(compose({position_weight(-nu, box), solver.map(), op_h(a, 1.0, box, opt.quantize),
                                      position_weight(s_order, box)}),
                             opt.norm);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows[k] = ConeProbeRow{radius, eps, est.value, est.iterations, secs};
  });
  return detail::finish(std::move(rows), opt.bounded_factor);
}

struct FreeKernelResult {
  int radius = 0;
  double epsilon = 0.0;
  double relative_error = 0.0;  // l2 over |n| <= inner radius / 2
  long sites = 0;
};

// The centre column of the limiting resolvent of the free chain against
// the closed-form kernel, on the inner half of the box.
inline FreeKernelResult free_kernel_probe(int radius, const LAPConfig& lap) {
  Hamiltonian h = Model::free(1).hamiltonian(radius, true);
  Vector delta = Vector::Zero(h.dim());
  delta[h.box().center_index()] = 1.0;
  auto r = lap_solve(h, lap, delta);
  FreeKernelResult out;
  out.radius = radius;
  out.epsilon = r.epsilon;
  const int half = h.inner_radius() / 2;
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < h.dim(); ++i) {
    long n = h.box().site(i)[0];
    if (std::labs(n) > half) continue;
    cplx g = free_kernel_1d(lap.lambda, lap.branch, n);
    num += std::norm(r.u[i] - g);
    den += std::norm(g);
    ++out.sites;
  }
  out.relative_error = std::sqrt(num / den);
  return out;
}

}  // namespace mlr
