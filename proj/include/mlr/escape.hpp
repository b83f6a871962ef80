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

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mlr/cutoff.hpp"
#include "mlr/errors.hpp"
#include "mlr/fit.hpp"
#include "mlr/model.hpp"
#include "mlr/parallel.hpp"
#include "mlr/quantize.hpp"
#include "mlr/stencil.hpp"
#include "mlr/symbol.hpp"

namespace mlr {

// Escape functions centred on the classical path y(t) = x2 / h + t v(xi2):
//
//   psi_0(t, x, xi) = Psi(|x - y(t)| / (delta1 S)) Psi(|xi - xi2| / delta2),
//   psi_j(t, x, xi) = C_j h^{(j-1) mu} (h^mu - S^{-mu})
//                     Psi(|x - y(t)| / (g_j delta1 S)) Psi(|xi - xi2| / (g_j delta2)),
//
// with S = 1/h + t, Psi = Phi^2 and 1 < g_1 < ... < g_m < 2.  Positions are
// in lattice units; on a ring of length `period` |x - y| is the distance
// along the ring.
struct EscapeLadder {
  Stencil stencil = Stencil::laplacian(1);
  Point x2{3.0};
  Point xi2{pi / 2};
  double delta1 = 0.2;
  double delta2 = 0.2;
  double h = 0.125;
  double mu = 0.5;
  int depth = 0;
  std::vector<double> gammas;     // g_1 .. g_m
  std::vector<double> constants;  // C_1 .. C_m
  CutoffPhi phi{};
  double period = 0.0;
  bool check_separation = true;
  std::optional<std::pair<Point, Point>> avoid;  // (x1, xi1) of the other bump, at scale h

  static std::vector<double> default_gammas(int m) {
    std::vector<double> g;
    for (int j = 1; j <= m; ++j) g.push_back(2.0 - std::ldexp(1.0, -j));
    return g;
  }

  static EscapeLadder standard(int depth = 2, double mu = 0.5) {
    EscapeLadder l;
    l.depth = depth;
    l.mu = mu;
    l.gammas = default_gammas(depth);
    l.constants.assign(depth, 1.0);
    return l;
  }

  // Smallest depth m with (m + 1) mu > 2 N.
  static int depth_for(double n_target, double mu) {
    return static_cast<int>(std::floor(2.0 * n_target / mu));
  }

  EscapeLadder at(double h_new) const {
    EscapeLadder l = *this;
    l.h = h_new;
    return l;
  }

  int dim() const { return static_cast<int>(x2.size()); }
  double scale(double t) const { return 1.0 / h + t; }
  double gamma(int j) const { return j == 0 ? 1.0 : gammas.at(j - 1); }
  // Momenta within this distance of xi2 must satisfy the velocity pinning.
  double pinning_radius() const { return depth >= 1 ? 2.0 * delta2 : delta2; }

  Point velocity2() const { return stencil.velocity(xi2); }

  Point center(double t) const {
    auto v = velocity2();
    Point y(x2.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = x2[i] / h + t * v[i];
    return y;
  }

  Point offset(std::span<const double> x, double t) const {
    Point y = center(t);
    for (std::size_t i = 0; i < y.size(); ++i) {
      double d = x[i] - y[i];
      if (period > 0.0) d -= period * std::round(d / period);
      y[i] = d;
    }
    return y;
  }

  double prefactor(int j, double t) const {
    if (j == 0) return 1.0;
    return constants.at(j - 1) * std::pow(h, (j - 1) * mu) * (std::pow(h, mu) - std::pow(scale(t), -mu));
  }

  double dprefactor(int j, double t) const {
    if (j == 0) return 0.0;
    return constants.at(j - 1) * std::pow(h, (j - 1) * mu) * mu * std::pow(scale(t), -1.0 - mu);
  }

  // Radial argument |x - y(t)| / (g_j delta1 S) and its momentum partner.
  double s_x(int j, double t, std::span<const double> x) const {
    return euclidean_norm(offset(x, t)) / (gamma(j) * delta1 * scale(t));
  }
  double s_xi(int j, std::span<const double> xi) const {
    return torus_distance(xi, xi2) / (gamma(j) * delta2);
  }

  double value(int j, double t, std::span<const double> x, std::span<const double> xi) const {
    double p = prefactor(j, t);
    if (p == 0.0) return 0.0;
    return p * phi.psi(s_x(j, t, x)) * phi.psi(s_xi(j, xi));
  }

  double sum(double t, std::span<const double> x, std::span<const double> xi) const {
    double s = 0.0;
    for (int j = 0; j <= depth; ++j) s += value(j, t, x, xi);
    return s;
  }

  // d/dt at fixed (x, xi).
  double dt(int j, double t, std::span<const double> x, std::span<const double> xi) const {
    const double S = scale(t), a = gamma(j) * delta1;
    Point w = offset(x, t);
    double r = euclidean_norm(w);
    double gx = phi.psi(r / (a * S)), gxi = phi.psi(s_xi(j, xi));
    if (gxi == 0.0) return 0.0;
    double ds = -r / (a * S * S);
    if (r > 0.0) ds -= dot(w, velocity2()) / (r * a * S);
    return dprefactor(j, t) * gx * gxi + prefactor(j, t) * phi.dpsi(r / (a * S)) * ds * gxi;
  }

  // Gradient in x.
  Point dx(int j, double t, std::span<const double> x, std::span<const double> xi) const {
    const double S = scale(t), a = gamma(j) * delta1;
    Point w = offset(x, t);
    double r = euclidean_norm(w);
    Point g(w.size(), 0.0);
    if (r == 0.0) return g;
    double c = prefactor(j, t) * phi.dpsi(r / (a * S)) * phi.psi(s_xi(j, xi)) / (a * S * r);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = c * w[i];
    return g;
  }

  // d_t psi_j + v(xi) . grad_x psi_j
  double transport(int j, double t, std::span<const double> x, std::span<const double> xi) const {
    return dt(j, t, x, xi) + dot(stencil.velocity(xi), dx(j, t, x, xi));
  }

  // The growth the prefactor must supply: mu C_j h^{(j-1) mu} S^{-1-mu} Psi Psi.
  double transport_floor(int j, double t, std::span<const double> x, std::span<const double> xi) const {
    if (j == 0) return 0.0;
    return dprefactor(j, t) * phi.psi(s_x(j, t, x)) * phi.psi(s_xi(j, xi));
  }

  Symbol symbol(double t) const {
    Symbol s;
    for (int j = 0; j <= depth; ++j) {
      double p = prefactor(j, t);
      if (p == 0.0 && j > 0) continue;
      auto term = Symbol::separable(
          dim(),
          [self = *this, j, t, p](std::span<const double> x) { return cplx(p * self.phi.psi(self.s_x(j, t, x))); },
          [self = *this, j](std::span<const double> xi) { return cplx(self.phi.psi(self.s_xi(j, xi))); });
      s = j == 0 ? term : s + term;
    }
    s.tag(SymbolClass::Sht, 0.0, h, t).real();
    return s;
  }

  // d/dt of symbol(t), term by term.
  Symbol dt_symbol(double t) const {
    Symbol s;
    for (int j = 0; j <= depth; ++j) {
      auto term = Symbol::separable(
          dim(),
          [self = *this, j, t](std::span<const double> x) {
            const double S = self.scale(t), a = self.gamma(j) * self.delta1;
            Point w = self.offset(x, t);
            double r = euclidean_norm(w);
            double ds = -r / (a * S * S);
            if (r > 0.0) ds -= dot(w, self.velocity2()) / (r * a * S);
            return cplx(self.dprefactor(j, t) * self.phi.psi(r / (a * S)) +
                        self.prefactor(j, t) * self.phi.dpsi(r / (a * S)) * ds);
          },
          [self = *this, j](std::span<const double> xi) { return cplx(self.phi.psi(self.s_xi(j, xi))); });
      s = j == 0 ? term : s + term;
    }
    s.tag(SymbolClass::Sht, -1.0, h, t).real();
    return s;
  }
};

struct LadderInvariants {
  bool ordered = true;     // 1 < g_1 < ... < g_m < 2, C_j >= 0
  bool nested = true;      // radii g_j delta1 S increase on the t grid
  bool separated = true;   // |y(t)| >= 3 delta1 S, and the other bump stays outside
  bool pinned = true;      // |v(xi) - v(xi2)| < delta1 / 2 near xi2
  double worst_separation = std::numeric_limits<double>::infinity();  // min |y| / (3 delta1 S)
  double worst_velocity_gap = 0.0;
  std::string message;

  bool ok() const { return ordered && nested && separated && pinned; }
};

inline LadderInvariants check_ladder(const EscapeLadder& l, const std::vector<double>& t_grid,
                                     long grid_n = 2001) {
  LadderInvariants r;
  auto fail = [&](bool& flag, const std::string& msg) {
    if (flag) r.message += (r.message.empty() ? "" : "; ") + msg;
    flag = false;
  };
  if (!(l.delta1 > 0.0 && l.delta2 > 0.0 && l.h > 0.0)) fail(r.ordered, "delta1, delta2 and h must be positive");
  if (static_cast<int>(l.gammas.size()) != l.depth || static_cast<int>(l.constants.size()) != l.depth)
    fail(r.ordered, "need one gamma and one constant per ladder step");
  else
    for (int j = 1; j <= l.depth; ++j) {
      if (!(l.gamma(j) > l.gamma(j - 1) && l.gamma(j) < 2.0)) fail(r.ordered, "gammas must increase in (1, 2)");
      if (!(l.constants[j - 1] >= 0.0)) fail(r.ordered, "ladder constants must be non-negative");
    }
  if (l.xi2.size() != l.x2.size() || static_cast<int>(l.x2.size()) != l.stencil.dim())
    fail(r.ordered, "base point and stencil dimensions differ");
  if (!r.ordered) return r;

  for (double t : t_grid) {
    const double S = l.scale(t);
    for (int j = 1; j <= l.depth; ++j)
      if (!(l.gamma(j) * l.delta1 * S > l.gamma(j - 1) * l.delta1 * S)) fail(r.nested, "support radii not nested");
    if (l.check_separation) {
      double ratio = euclidean_norm(l.center(t)) / (3.0 * l.delta1 * S);
      r.worst_separation = std::min(r.worst_separation, ratio);
      if (ratio < 1.0) fail(r.separated, "path comes within 3 delta1 S of the origin at t = " + std::to_string(t));
    }
    if (l.avoid) {
      // the other bump's centre, in lattice units, must lie outside the
      // outermost support (radius 2 delta1 S in x, 2 delta2 in xi)
      Point x1 = l.avoid->first;
      for (auto& c : x1) c /= l.h;
      bool apart = euclidean_norm(l.offset(x1, t)) > 2.0 * l.delta1 * S ||
                   torus_distance(l.avoid->second, l.xi2) > 2.0 * l.delta2;
      if (!apart) fail(r.separated, "outer support reaches the other bump at t = " + std::to_string(t));
    }
  }

  const auto v2 = l.velocity2();
  const double rad = l.pinning_radius();
  const int d = l.dim();
  // grid over the cube of half-width rad around xi2, kept to the ball
  const long per = d == 1 ? grid_n : std::max<long>(11, static_cast<long>(std::pow(grid_n, 1.0 / d)));
  std::vector<long> idx(d, 0);
  Point xi(d);
  while (true) {
    for (int i = 0; i < d; ++i) xi[i] = l.xi2[i] - rad + 2.0 * rad * idx[i] / (per - 1);
    if (torus_distance(xi, l.xi2) <= rad) {
      auto v = l.stencil.velocity(xi);
      double gap = 0.0;
      for (int i = 0; i < d; ++i) gap += (v[i] - v2[i]) * (v[i] - v2[i]);
      r.worst_velocity_gap = std::max(r.worst_velocity_gap, std::sqrt(gap));
    }
    int i = 0;
    while (i < d && ++idx[i] == per) idx[i++] = 0;
    if (i == d) break;
  }
  if (!(r.worst_velocity_gap < 0.5 * l.delta1))
    fail(r.pinned, "velocity varies by " + std::to_string(r.worst_velocity_gap) + " >= delta1 / 2 within " +
                       std::to_string(rad) + " of xi2");
  return r;
}

inline void validate_ladder(const EscapeLadder& l, const std::vector<double>& t_grid) {
  auto r = check_ladder(l, t_grid);
  if (!r.ok()) throw LadderInvariantError("escape ladder: " + r.message);
}

inline std::vector<double> default_transport_times() { return {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0}; }

struct TransportGrid {
  std::vector<double> times = default_transport_times();
  int x_points = 401;   // per dimension, across 1.25 times the support
  int xi_points = 201;  // per dimension, across 1.25 times the support
  int xi_global = 64;   // extra momenta spread over the whole torus
  int fd_points = 100;
  std::uint64_t seed = 0x5EED;
};

struct TransportReport {
  int j = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  double t_at = 0.0;
  Point x_at, xi_at;
  long points = 0;
  double max_outside = 0.0;   // |transport| outside the support (should be 0)
  double fd_mismatch = 0.0;   // analytic vs centred differences
  bool pass = false;
};

namespace detail {

template <class F>
void for_each_ladder_point(const EscapeLadder& l, int j, const TransportGrid& g, F&& f) {
  const int d = l.dim();
  const double rx_rel = 1.25 * l.gamma(j) * l.delta1, rxi = 1.25 * l.gamma(j) * l.delta2;
  std::vector<Point> momenta;
  {
    const int n = g.xi_points;
    const long total = static_cast<long>(std::pow(n, d));
    for (long k = 0; k < total; ++k) {
      Point xi(d);
      long q = k;
      for (int i = 0; i < d; ++i, q /= n) xi[i] = l.xi2[i] - rxi + 2.0 * rxi * (q % n) / (n - 1);
      momenta.push_back(xi);
    }
    const long gtot = static_cast<long>(std::pow(g.xi_global, d));
    for (long k = 0; k < gtot; ++k) {
      Point xi(d);
      long q = k;
      for (int i = 0; i < d; ++i, q /= g.xi_global) xi[i] = two_pi * (q % g.xi_global) / g.xi_global;
      momenta.push_back(xi);
    }
  }
  for (double t : g.times) {
    const double rx = rx_rel * l.scale(t);
    Point y = l.center(t);
    const int n = g.x_points;
    const long total = static_cast<long>(std::pow(n, d));
    Point x(d);
    for (long k = 0; k < total; ++k) {
      long q = k;
      for (int i = 0; i < d; ++i, q /= n) x[i] = y[i] - rx + 2.0 * rx * (q % n) / (n - 1);
      for (const auto& xi : momenta) f(t, x, xi);
    }
  }
}

}  // namespace detail

// Minimum over a (t, x, xi) grid of  d_t psi_j + v . grad_x psi_j  minus the
// floor the ladder step needs (zero for j = 0).  Passing means the minimum
// is >= -1e-12.  With validate = false the ladder invariants are not
// enforced, which is how the negative controls are run.
inline TransportReport verify_transport(const EscapeLadder& l, int j, const TransportGrid& g = {},
                                        bool validate = true) {
  if (j < 0 || j > l.depth) throw PreconditionError("ladder step out of range");
  if (validate) validate_ladder(l, g.times);
  TransportReport r;
  r.j = j;
  detail::for_each_ladder_point(l, j, g, [&](double t, const Point& x, const Point& xi) {
    ++r.points;
    double tr = l.transport(j, t, x, xi);
    double m = tr - l.transport_floor(j, t, x, xi);
    if (l.value(j, t, x, xi) == 0.0 && l.s_x(j, t, x) >= 1.0) r.max_outside = std::max(r.max_outside, std::fabs(tr));
    if (m < r.min_margin) {
      r.min_margin = m;
      r.t_at = t;
      r.x_at = x;
      r.xi_at = xi;
    }
  });

  // centred differences at random points of the support
  std::mt19937_64 rng(g.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ut(0.0, 1.0);
  const double tmax = g.times.empty() ? 10.0 : *std::max_element(g.times.begin(), g.times.end());
  for (int k = 0; k < g.fd_points; ++k) {
    double t = tmax * ut(rng);
    const double S = l.scale(t);
    Point y = l.center(t), x(l.dim()), xi(l.dim());
    for (int i = 0; i < l.dim(); ++i) {
      x[i] = y[i] + l.gamma(j) * l.delta1 * S * u(rng);
      xi[i] = l.xi2[i] + l.gamma(j) * l.delta2 * u(rng);
    }
    const double ht = 1e-5 * S, hx = 1e-5 * l.delta1 * S;
    double fd_t = (l.value(j, t + ht, x, xi) - l.value(j, t - ht, x, xi)) / (2.0 * ht);
    double an_t = l.dt(j, t, x, xi);
    r.fd_mismatch = std::max(r.fd_mismatch, std::fabs(fd_t - an_t));
    auto an_x = l.dx(j, t, x, xi);
    for (int i = 0; i < l.dim(); ++i) {
      Point xp = x, xm = x;
      xp[i] += hx;
      xm[i] -= hx;
      double fd_x = (l.value(j, t, xp, xi) - l.value(j, t, xm, xi)) / (2.0 * hx);
      r.fd_mismatch = std::max(r.fd_mismatch, std::fabs(fd_x - an_x[i]));
    }
  }
  r.pass = r.min_margin >= -1e-12;
  return r;
}

struct ConstantsReport {
  std::vector<double> constants;  // C_1 .. C_m
  std::vector<double> kappas;     // kappa_1 .. kappa_m
};

// C_j = safety * remainder_j / (mu kappa_j), where kappa_j is the smallest
// value of Psi(|x - y| / (g_j delta1 S)) Psi(|xi - xi2| / (g_j delta2)) on
// the support of psi_{j-1}: the floor of step j must dominate the
// remainder left by step j - 1 there.
inline ConstantsReport choose_constants(const EscapeLadder& l, const std::vector<double>& remainder_estimates,
                                        double safety = 2.0, const std::vector<double>& t_grid = {0.0, 1.0, 10.0},
                                        int points = 201) {
  if (static_cast<int>(remainder_estimates.size()) != l.depth)
    throw PreconditionError("need one remainder estimate per ladder step");
  if (!(safety > 0.0)) throw PreconditionError("safety factor must be positive");
  ConstantsReport r;
  for (int j = 1; j <= l.depth; ++j) {
    if (remainder_estimates[j - 1] < 0.0) throw PreconditionError("remainder estimates must be non-negative");
    double kappa = std::numeric_limits<double>::infinity();
    const double gprev = l.gamma(j - 1), gj = l.gamma(j);
    for (double t : t_grid) {
      const double S = l.scale(t);
      Point y = l.center(t);
      for (int a = 0; a < points; ++a) {
        for (int b = 0; b < points; ++b) {
          // radial samples of O_{j-1}(t) in x and xi (the ladder is radial in both)
          double rx = gprev * l.delta1 * S * a / (points - 1);
          double rxi = gprev * l.delta2 * b / (points - 1);
          Point x = y, xi = l.xi2;
          x[0] += rx;
          xi[0] += rxi;
          if (l.value(j - 1, t, x, xi) == 0.0 && j - 1 > 0 && l.prefactor(j - 1, t) != 0.0) continue;
          kappa = std::min(kappa, l.phi.psi(rx / (gj * l.delta1 * S)) * l.phi.psi(rxi / (gj * l.delta2)));
        }
      }
    }
    if (!(kappa > 0.0)) throw LadderInvariantError("ladder step " + std::to_string(j) + " is not nested (kappa = 0)");
    r.kappas.push_back(kappa);
    r.constants.push_back(safety * remainder_estimates[j - 1] / (l.mu * kappa));
  }
  return r;
}

// ---- operator-level checks on small dense boxes ------------------------

namespace detail {

inline std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline Matrix hermitian_dense(const LinearMap& a) {
  Matrix m = to_dense(a);
  return 0.5 * (m + m.adjoint());
}

}  // namespace detail

// F(t) = (Op(psi) + Op(psi)^*) / 2 and its analytic t-derivative, both at
// quantization scale 1 (the ladder already lives in lattice units).
struct EscapeOperators {
  Matrix F;
  Matrix dF;
};

inline EscapeOperators escape_operators(const EscapeLadder& l, const Box& box, double t, const QuantizeOptions& q) {
  return {detail::hermitian_dense(op_h(l.symbol(t), 1.0, box, q)),
          detail::hermitian_dense(op_h(l.dt_symbol(t), 1.0, box, q))};
}

// Exponent the energy defect must reach: 2 N mu, less 1/2 for the
// remainders of the sharp Garding inequality.
inline double required_energy_exponent(double n_target, double mu) { return 2.0 * n_target * mu - 0.5; }

struct EnergyCheckOptions {
  std::vector<double> h_list{0.25, 0.125, 0.0625};
  std::vector<double> t_samples{0.0, 1.0, 5.0};
  double required_exponent = 1.5;
  double fd_tol = 1e-8;
  double hermitian_tol = 1e-10;
  bool validate = true;
  // The dense boxes are small next to the momentum cutoffs; tails are
  // reported, not fatal.
  QuantizeOptions quantize{.resolution = ResolutionPolicy::warn_only};
  int jobs = 1;
};

struct EnergyRow {
  double h = 0.0;
  double t = 0.0;
  double lambda_min = 0.0;
  double fd_mismatch = 0.0;
  double hermitian_drift = 0.0;
};

struct EnergyReport {
  std::vector<EnergyRow> rows;
  std::vector<double> defects;  // per h: max over t of max(-lambda_min, 0)
  DecayFit fit;                 // defect against h
  double exponent = 0.0;
  // -lambda_min <= C S^{-p}, S = 1/h + t, fitted over the negative rows
  double bound_c = 0.0;
  double bound_p = 0.0;
  bool pass = false;
};

// Smallest eigenvalue of d_t F + i [H, F] for every (h, t) on a CAP-free
// dense box.  The defect must vanish like h^exponent.
inline EnergyReport energy_inequality_check(const Model& model, int radius, const EscapeLadder& ladder,
                                            const EnergyCheckOptions& opt = {}) {
  if (opt.h_list.size() < 2) throw PreconditionError("energy check needs at least two values of h");
  Hamiltonian ham = model.hamiltonian(radius, false);
  if (ham.dim() > 4096) throw PreconditionError("energy check needs a small box (at most 4096 sites)");
  const Matrix H = ham.dense();
  const Box& box = ham.box();
  EnergyReport rep;
  std::vector<std::pair<double, double>> pairs;
  for (double hh : opt.h_list)
    for (double t : opt.t_samples) pairs.emplace_back(hh, t);
  rep.rows.resize(pairs.size());
  parallel_for(pairs.size(), opt.jobs, [&](std::size_t k) {
    auto [hh, t] = pairs[k];
    EscapeLadder l = ladder.at(hh);
    if (opt.validate) validate_ladder(l, {t});
    auto ops = escape_operators(l, box, t, opt.quantize);
    // shrink the step until the centred difference settles (the error is
    // quadratic in the step, rounding takes over near 1e-7 S)
    double mismatch = std::numeric_limits<double>::infinity();
    for (double rel = 1e-5; rel >= 1e-7 && mismatch > opt.fd_tol; rel /= 4.0) {
      const double step = rel * l.scale(t);
      Matrix fp = escape_operators(l, box, t + step, opt.quantize).F;
      Matrix fm = escape_operators(l, box, t - step, opt.quantize).F;
      mismatch = std::min(mismatch, ((fp - fm) / (2.0 * step) - ops.dF).cwiseAbs().maxCoeff());
    }
    if (mismatch > opt.fd_tol)
      throw NumericalError("analytic dF/dt disagrees with the centred difference by " + detail::format_g(mismatch));
    Matrix Q = ops.dF + cplx(0, 1) * (H * ops.F - ops.F * H);
    double drift = (Q - Q.adjoint()).cwiseAbs().maxCoeff();
    if (drift > opt.hermitian_tol)
      throw NumericalError("d_t F + i[H, F] is not hermitian (drift " + detail::format_g(drift) + ")");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Q + Q.adjoint()), Eigen::EigenvaluesOnly);
    rep.rows[k] = EnergyRow{hh, t, es.eigenvalues()(0), mismatch, drift};
  });

  std::vector<double> xs, sx, sy;
  for (double hh : opt.h_list) {
    double worst = 0.0;
    for (const auto& r : rep.rows)
      if (r.h == hh) worst = std::max(worst, -r.lambda_min);
    xs.push_back(hh);
    rep.defects.push_back(worst);
  }
  for (const auto& r : rep.rows)
    if (r.lambda_min < 0.0) {
      sx.push_back(1.0 / r.h + r.t);
      sy.push_back(-r.lambda_min);
    }
  rep.fit = DecayFit::loglog(xs, rep.defects, 2);
  if (rep.fit.degenerate) {
    // a vanishing defect at some h: no power law to fit, and nothing to pay
    bool all_zero = std::all_of(rep.defects.begin(), rep.defects.end(), [](double d) { return d == 0.0; });
    rep.exponent = std::numeric_limits<double>::infinity();
    rep.pass = all_zero || rep.defects.back() == 0.0;
  } else {
    rep.exponent = rep.fit.slope;
    rep.pass = rep.exponent >= opt.required_exponent;
  }
  if (sx.size() >= 2 && std::adjacent_find(sx.begin(), sx.end(), std::not_equal_to<>()) != sx.end()) {
    auto f = DecayFit::loglog(sx, sy, 2);
    rep.bound_p = -f.slope;
    rep.bound_c = std::pow(10.0, f.intercept);
    // the fit passes through the cloud; lift it over every sample
    for (std::size_t i = 0; i < sx.size(); ++i)
      rep.bound_c = std::max(rep.bound_c, sy[i] * std::pow(sx[i], rep.bound_p));
  } else if (!sy.empty()) {
    rep.bound_p = 0.0;
    rep.bound_c = *std::max_element(sy.begin(), sy.end());
  }
  return rep;
}

// Lower bound  -C int_0^t (1/h + s)^{-p} ds  for e^{itH} F(t) e^{-itH} - F(0).
inline double integrated_bound(double c, double p, double h, double t) {
  if (c == 0.0 || t == 0.0) return 0.0;
  const double s0 = 1.0 / h, s1 = 1.0 / h + t;
  if (std::fabs(p - 1.0) < 1e-12) return -c * std::log(s1 / s0);
  return -c * (std::pow(s1, 1.0 - p) - std::pow(s0, 1.0 - p)) / (1.0 - p);
}

struct MonotonicityRow {
  double h = 0.0;
  double t = 0.0;
  double lambda_min = 0.0;  // of G(t) - F(0)
  double bound = 0.0;
  double margin = 0.0;      // lambda_min - bound
};

struct MonotonicityReport {
  std::vector<MonotonicityRow> rows;
  bool pass = false;
};

// G(t) = e^{itH} F(t) e^{-itH} must stay above F(0) up to the integrated
// energy defect.  G(0) = F(0) exactly.
inline MonotonicityReport monotonicity_check(const Model& model, int radius, const EscapeLadder& ladder,
                                             const std::vector<double>& t_list, double bound_c, double bound_p,
                                             const QuantizeOptions& q = {.resolution = ResolutionPolicy::warn_only},
                                             double slack = 1e-12) {
  Hamiltonian ham = model.hamiltonian(radius, false);
  if (ham.dim() > 4096) throw PreconditionError("monotonicity check needs a small box (at most 4096 sites)");
  const Box& box = ham.box();
  Eigen::SelfAdjointEigenSolver<Matrix> es(ham.dense());
  const Matrix& V = es.eigenvectors();
  const Matrix F0 = escape_operators(ladder, box, 0.0, q).F;
  MonotonicityReport rep;
  rep.pass = true;
  for (double t : t_list) {
    if (t < 0.0) throw PreconditionError("monotonicity check needs t >= 0");
    Matrix F = escape_operators(ladder, box, t, q).F;
    Matrix G;
    if (t == 0.0) {
      G = F;
    } else {
      Vector ph = (es.eigenvalues().cast<cplx>() * cplx(0, t)).array().exp();
      Matrix U = V * ph.asDiagonal() * V.adjoint();  // e^{itH}
      G = U * F * U.adjoint();
    }
    Matrix D = G - F0;
    D = 0.5 * (D + D.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> ed(D, Eigen::EigenvaluesOnly);
    MonotonicityRow row{ladder.h, t, ed.eigenvalues()(0), integrated_bound(bound_c, bound_p, ladder.h, t), 0.0};
    row.margin = row.lambda_min - row.bound;
    if (row.margin < -slack) rep.pass = false;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace mlr
