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

#include <algorithm>
#include <array>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mlr/cutoff.hpp"
#include "mlr/errors.hpp"
#include "mlr/stencil.hpp"
#include "mlr/symbol.hpp"

namespace mlr {

// A point (x, xi, y, eta) of T*(M x M); the diagonal is (x, xi, -x, xi).
struct KernelPoint {
  Point x, xi, y, eta;

  KernelPoint() = default;
  KernelPoint(Point x_, Point xi_, Point y_, Point eta_)
      : x(std::move(x_)), xi(std::move(xi_)), y(std::move(y_)), eta(std::move(eta_)) {
    for (auto& v : xi) v = wrap_angle(v);
    for (auto& v : eta) v = wrap_angle(v);
    if (x.size() != xi.size() || y.size() != x.size() || eta.size() != x.size())
      throw PreconditionError("kernel point coordinates have mismatched dimensions");
  }

  static KernelPoint one_d(double x, double xi, double y, double eta) {
    return KernelPoint({x}, {xi}, {y}, {eta});
  }

  int dim() const { return static_cast<int>(x.size()); }
};

struct MembershipReport {
  bool in_sigma0 = false;
  bool in_sigma_plus = false;
  bool in_sigma_minus = false;
  bool in_sigma_prime_plus = false;
  bool in_sigma_prime_minus = false;
  double d_sigma0 = 0.0;
  double d_sigma_plus = 0.0;
  double d_sigma_minus = 0.0;
  double d_sigma_prime_plus = 0.0;
  double d_sigma_prime_minus = 0.0;
  double lambda = 0.0;
  double tol = 0.0;

  bool outside_all(int sign) const {
    return !in_sigma0 && !(sign > 0 ? in_sigma_plus : in_sigma_minus) &&
           !(sign > 0 ? in_sigma_prime_plus : in_sigma_prime_minus);
  }
  bool inside_any(int sign) const { return !outside_all(sign); }
};

// Sampled energy shell p0^{-1}(lambda).
class EnergyShell {
 public:
  EnergyShell(const Stencil& st, double lambda, long grid_n = 4096, double critical_floor = 1e-8)
      : stencil_(st), lambda_(lambda) {
    if (grid_n < 64) throw PreconditionError("shell sampling needs grid_n >= 64");
    if (st.dim() == 1)
      sample_1d(grid_n);
    else
      sample_lines(grid_n);
    for (const auto& p : points_) {
      if (euclidean_norm(st.velocity(p)) < critical_floor)
        throw CriticalValueError("energy shell at lambda = " + std::to_string(lambda) +
                                 " contains a critical point of p0");
    }
  }

  const std::vector<Point>& points() const { return points_; }
  bool empty() const { return points_.empty(); }
  double lambda() const { return lambda_; }
  const Stencil& stencil() const { return stencil_; }

  // Newton projection of xi onto the shell along grad p0.
  Point project(Point xi) const {
    for (int it = 0; it < 50; ++it) {
      double f = stencil_.p0(xi) - lambda_;
      auto v = stencil_.velocity(xi);
      double v2 = dot(v, v);
      if (v2 == 0.0) break;
      for (std::size_t i = 0; i < xi.size(); ++i) xi[i] -= f * v[i] / v2;
      if (std::fabs(f) < 1e-15) break;
    }
    for (auto& c : xi) c = wrap_angle(c);
    return xi;
  }

 private:
  double value(std::span<const double> xi) const { return stencil_.p0(xi) - lambda_; }

  void sample_1d(long n) {
    double prev_x = 0.0, prev_f = value(std::span<const double>(&prev_x, 1));
    for (long k = 1; k <= n; ++k) {
      double x = two_pi * k / n;
      double f = value(std::span<const double>(&x, 1));
      if (prev_f == 0.0) {
        points_.push_back({wrap_angle(prev_x)});
      } else if (prev_f * f < 0.0) {
        double a = prev_x, b = x, fa = prev_f;
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
          double m = 0.5 * (a + b);
          double fm = value(std::span<const double>(&m, 1));
          if ((fm < 0.0) == (fa < 0.0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        points_.push_back({wrap_angle(0.5 * (a + b))});
      }
      prev_x = x;
      prev_f = f;
    }
  }

  // d >= 2: sign changes along grid lines in every coordinate direction,
  // refined by bisection along the line.
  void sample_lines(long n) {
    const int d = stencil_.dim();
    for (int axis = 0; axis < d; ++axis) {
      std::vector<long> k(d, 0);
      Point xi(d), a_pt(d);
      while (true) {
        for (int i = 0; i < d; ++i) xi[i] = two_pi * k[i] / n;
        double prev_t = 0.0;
        xi[axis] = 0.0;
        double prev_f = value(xi);
        for (long s = 1; s <= n; ++s) {
          double t = two_pi * s / n;
          xi[axis] = t;
          double f = value(xi);
          if (prev_f * f < 0.0) {
            double a = prev_t, b = t, fa = prev_f;
            for (int it = 0; it < 100 && b - a > 1e-14; ++it) {
              double m = 0.5 * (a + b);
              xi[axis] = m;
              double fm = value(xi);
              if ((fm < 0.0) == (fa < 0.0)) {
                a = m;
                fa = fm;
              } else {
                b = m;
              }
            }
            Point p = xi;
            p[axis] = wrap_angle(0.5 * (a + b));
            points_.push_back(p);
          }
          prev_t = t;
          prev_f = f;
        }
        // advance the other coordinates
        int i = d - 1;
        while (i >= 0) {
          if (i == axis) {
            --i;
            continue;
          }
          if (++k[i] < n) break;
          k[i] = 0;
          --i;
        }
        if (i < 0) break;
      }
    }
  }

  Stencil stencil_;
  double lambda_;
  std::vector<Point> points_;
};

namespace detail {

// min over t with sign*t >= 0 of |w - t v|^2, and the minimizer.
inline std::pair<double, double> ray_distance2(std::span<const double> w, std::span<const double> v,
                                              int sign) {
  double v2 = dot(v, v);
  double t = v2 > 0.0 ? dot(w, v) / v2 : 0.0;
  if (sign * t < 0.0) t = 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += (w[i] - t * v[i]) * (w[i] - t * v[i]);
  return {s, t};
}

inline double sq(double a) { return a * a; }

// Minimizes cost(xi') over the sampled shell, then (d >= 2) refines locally
// by a pattern search along the shell.
template <class Cost>
double shell_minimum(const EnergyShell& shell, Cost&& cost) {
  double best = std::numeric_limits<double>::infinity();
  Point arg;
  for (const auto& p : shell.points()) {
    double c = cost(p);
    if (c < best) {
      best = c;
      arg = p;
    }
  }
  if (arg.empty() || arg.size() < 2) return best;
  const auto& st = shell.stencil();
  double step = 0.05;
  while (step > 1e-10) {
    bool improved = false;
    auto v = st.velocity(arg);
    double vn = euclidean_norm(v);
    // tangent directions: project coordinate axes off the normal
    for (std::size_t ax = 0; ax < arg.size(); ++ax) {
      Point tau(arg.size(), 0.0);
      tau[ax] = 1.0;
      double c = v[ax] / (vn * vn);
      for (std::size_t i = 0; i < arg.size(); ++i) tau[i] -= c * v[i];
      double tn = euclidean_norm(tau);
      if (tn < 1e-12) continue;
      for (double s : {step, -step}) {
        Point q = arg;
        for (std::size_t i = 0; i < q.size(); ++i) q[i] += s * tau[i] / tn;
        q = shell.project(q);
        double cq = cost(q);
        if (cq < best) {
          best = cq;
          arg = q;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace detail

// Distances of a kernel point to Sigma_0, Sigma_{+-}(lambda) and
// Sigma'_{+-}(lambda), each minimized over the set's parametrization.
//   Sigma_0:    |x+y|^2 + |xi-eta|^2
//   Sigma_{+-}: |x+y - t v(xi')|^2 + |xi-xi'|^2 + |eta-xi'|^2, +-t >= 0
//   Sigma'_{+-}: (x, xi) to {(t v(xi'), xi') : +-t >= 0} and (y, eta) to
//               {(-t v(eta'), eta') : -+t >= 0}, combined in l2.
inline MembershipReport classify(const KernelPoint& kp, const Stencil& st, double lambda, double tol,
                                 long grid_n = 4096) {
  if (!(tol > 0.0)) throw PreconditionError("classify needs tol > 0");
  if (kp.dim() != st.dim()) throw PreconditionError("kernel point and stencil dimensions differ");
  EnergyShell shell(st, lambda, grid_n);
  const int d = kp.dim();
  MembershipReport r;
  r.lambda = lambda;
  r.tol = tol;

  Point w(d);
  for (int i = 0; i < d; ++i) w[i] = kp.x[i] + kp.y[i];
  r.d_sigma0 = std::sqrt(dot(w, w) + detail::sq(torus_distance(kp.xi, kp.eta)));

  const double inf = std::numeric_limits<double>::infinity();
  auto sigma = [&](int sign) {
    if (shell.empty()) return inf;
    return std::sqrt(detail::shell_minimum(shell, [&](const Point& p) {
      auto v = st.velocity(p);
      return detail::ray_distance2(w, v, sign).first + detail::sq(torus_distance(kp.xi, p)) +
             detail::sq(torus_distance(kp.eta, p));
    }));
  };
  auto sigma_prime = [&](int sign) {
    if (shell.empty()) return inf;
    double d1 = detail::shell_minimum(shell, [&](const Point& p) {
      auto v = st.velocity(p);
      return detail::ray_distance2(kp.x, v, sign).first + detail::sq(torus_distance(kp.xi, p));
    });
    Point neg_y(d);
    for (int i = 0; i < d; ++i) neg_y[i] = -kp.y[i];
    // y = -t v with -+t >= 0  <=>  -y = t v with the same constraint
    double d2 = detail::shell_minimum(shell, [&](const Point& p) {
      auto v = st.velocity(p);
      return detail::ray_distance2(neg_y, v, -sign).first + detail::sq(torus_distance(kp.eta, p));
    });
    return std::sqrt(d1 + d2);
  };
  r.d_sigma_plus = sigma(+1);
  r.d_sigma_minus = sigma(-1);
  r.d_sigma_prime_plus = sigma_prime(+1);
  r.d_sigma_prime_minus = sigma_prime(-1);
  r.in_sigma0 = r.d_sigma0 <= tol;
  r.in_sigma_plus = r.d_sigma_plus <= tol;
  r.in_sigma_minus = r.d_sigma_minus <= tol;
  r.in_sigma_prime_plus = r.d_sigma_prime_plus <= tol;
  r.in_sigma_prime_minus = r.d_sigma_prime_minus <= tol;
  return r;
}

// Product bumps a_j(x, xi) = Phi(|x - x_j| / delta1) Phi(|xi - xi_j| / delta2).
inline Symbol make_bump(const Point& x0, const Point& xi0, double delta1, double delta2,
                        CutoffPhi phi = CutoffPhi()) {
  if (!(delta1 > 0.0 && delta2 > 0.0)) throw PreconditionError("bump radii must be positive");
  const int d = static_cast<int>(x0.size());
  Symbol s = Symbol::separable(
      d, [x0, delta1, phi](std::span<const double> x) { return cplx(phi.phi(euclidean_distance(x, x0) / delta1)); },
      [xi0, delta2, phi](std::span<const double> xi) { return cplx(phi.phi(torus_distance(xi, xi0) / delta2)); });
  s.tag(SymbolClass::S).with_bound(1.0).real().with_support(SupportBall{x0, delta1, xi0, delta2});
  return s;
}

inline std::pair<Symbol, Symbol> make_bump_pair(const Point& x1, const Point& xi1, const Point& x2,
                                                const Point& xi2, double delta1, double delta2) {
  return {make_bump(x1, xi1, delta1, delta2), make_bump(x2, xi2, delta1, delta2)};
}

struct ConeOptions {
  double r0 = 4.0;                      // radial cutoff: zero for |x| <= r0
  double outer_taper = 0.0;             // > 0: multiply by Phi(|x| / outer_taper)
  double critical_floor = 1e-2;
};

// Smooth symbol supported in the cone  +-x.v/(|x||v|) >= +-gamma,
// p0(xi) in the window, |x| >= r0.
//
// Cone factor: a smooth step in the cosine c that vanishes for
// +-(c - gamma) <= 0 and equals 1 within half the remaining range; energy
// factor Phi(|p0 - centre| / half_width); radial factor step(|x| / (2 r0)).
inline Symbol make_cone_symbol(int sign, double gamma, const Stencil& st, EnergyInterval window,
                               const ConeOptions& opt = {}) {
  if (!(gamma > -1.0 && gamma < 1.0)) throw PreconditionError("cone aperture gamma must lie in (-1, 1)");
  if (sign != 1 && sign != -1) throw PreconditionError("cone sign must be +1 or -1");
  if (!(opt.r0 > 0.0)) throw PreconditionError("cone radius r0 must be positive");
  validate_energy_window(st, window, opt.critical_floor);
  const CutoffPhi phi;
  const double margin = sign > 0 ? 1.0 - gamma : 1.0 + gamma;
  auto cone = [phi, sign, gamma, margin](double c) {
    return phi.step(0.5 + 0.5 * sign * (c - gamma) / margin);
  };
  auto energy = [phi, st, window](std::span<const double> xi) {
    return phi.phi(std::fabs(st.p0(xi) - window.center()) / window.half_width());
  };
  auto radial = [phi, opt](double r) {
    double v = phi.step(r / (2.0 * opt.r0));
    if (opt.outer_taper > 0.0) v *= phi.phi(r / opt.outer_taper);
    return v;
  };
  Symbol s;
  if (st.dim() == 1) {
    // In one dimension the cosine is sign(x) sign(v), so the symbol splits
    // into an x > 0 and an x < 0 product term.
    auto positive = Symbol::separable(
        1, [radial](std::span<const double> x) { return cplx(x[0] > 0.0 ? radial(x[0]) : 0.0); },
        [cone, energy, st](std::span<const double> xi) {
          double v = st.velocity(xi)[0];
          double c = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
          return cplx(cone(c) * energy(xi));
        });
    auto negative = Symbol::separable(
        1, [radial](std::span<const double> x) { return cplx(x[0] < 0.0 ? radial(-x[0]) : 0.0); },
        [cone, energy, st](std::span<const double> xi) {
          double v = st.velocity(xi)[0];
          double c = v > 0.0 ? -1.0 : (v < 0.0 ? 1.0 : 0.0);
          return cplx(cone(c) * energy(xi));
        });
    s = positive + negative;
  } else {
    s = Symbol::general(st.dim(), [cone, energy, radial, st](std::span<const double> x,
                                                             std::span<const double> xi) {
      double r = euclidean_norm(x);
      if (r == 0.0) return cplx(0.0);
      auto v = st.velocity(xi);
      double vn = euclidean_norm(v);
      double c = vn > 0.0 ? dot(x, v) / (r * vn) : 0.0;
      return cplx(cone(c) * energy(xi) * radial(r));
    });
  }
  s.tag(SymbolClass::S).with_bound(1.0).real();
  return s;
}

struct ConeInvariance {
  bool precondition = false;  // false: the check is vacuous
  bool holds = false;
};

// Forward invariance of the cone x.v >= gamma |x||v| under x -> x + t v.
inline ConeInvariance cone_forward_invariance(const Point& x, const Point& xi, double gamma,
                                              const Stencil& st, const std::vector<double>& t_list) {
  auto v = st.velocity(xi);
  double vn = euclidean_norm(v);
  ConeInvariance r;
  r.precondition = dot(x, v) >= gamma * euclidean_norm(x) * vn;
  if (!r.precondition) return r;
  r.holds = true;
  Point y(x.size());
  for (double t : t_list) {
    if (t < 0.0) throw PreconditionError("cone invariance times must be >= 0");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + t * v[i];
    if (!(dot(y, v) >= gamma * euclidean_norm(y) * vn)) r.holds = false;
  }
  return r;
}

}  // namespace mlr
