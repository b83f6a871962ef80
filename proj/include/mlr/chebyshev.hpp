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

#include <cmath>
#include <functional>
#include <vector>

#include <fftw3.h>

#include "mlr/cutoff.hpp"
#include "mlr/errors.hpp"
#include "mlr/fft.hpp"
#include "mlr/lattice.hpp"
#include "mlr/linear_map.hpp"

namespace mlr {

namespace detail {

// J_0(x), ..., J_n(x) by Miller's backward recurrence
//   J_{k-1} = (2k / x) J_k - J_{k+1},
// started well above max(n, x) and normalized with J_0 + 2 sum J_{2k} = 1.
// (std::cyl_bessel_j overflows for orders and arguments in the hundreds.)
inline std::vector<double> bessel_j_sequence(double x, std::size_t n) {
  std::vector<double> out(n + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (x < 0.0) throw PreconditionError("bessel_j_sequence needs x >= 0");
  const double top = std::max(static_cast<double>(n), x);
  const std::size_t start = static_cast<std::size_t>(top + 30.0 + 10.0 * std::cbrt(top)) | 1u;
  double next = 0.0, cur = 1e-300, norm = 0.0;
  for (std::size_t k = start; k > 0; --k) {
    // cur = J_k (unnormalized), next = J_{k+1}
    if (k <= n) out[k] = cur;
    if (k % 2 == 0) norm += 2.0 * cur;
    double prev = (2.0 * k / x) * cur - next;
    next = cur;
    cur = prev;
    if (std::fabs(cur) > 1e250) {
      for (std::size_t m = k; m <= n && m <= start; ++m) out[m] *= 1e-250;
      next *= 1e-250;
      cur *= 1e-250;
      norm *= 1e-250;
    }
  }
  out[0] = cur;
  norm += cur;
  for (auto& v : out) v /= norm;
  return out;
}

}  // namespace detail

// [center - half_width, center + half_width] contains the real parts of
// the spectrum; imag_extent bounds |Im| (non-zero only with an absorber).
struct Enclosure {
  double center = 0.0;
  double half_width = 1.0;
  double imag_extent = 0.0;

  // Growth rate of T_k on the Bernstein ellipse through +- i imag_extent.
  double bernstein_rho() const {
    double b = imag_extent / half_width;
    return std::sqrt(1.0 + b * b) + b;
  }
};

inline Enclosure enclosure_of(const Hamiltonian& h) {
  auto re = h.real_enclosure();
  double hw = re.half_width();
  // a small margin keeps rounding in the recurrence from leaving [-1, 1]
  hw += 1e-3 * hw + 1e-12;
  double w = h.absorber().size() ? h.absorber().maxCoeff() : 0.0;
  return Enclosure{re.center(), hw, w};
}

// Truncated expansion  f(z) ~ sum_k c_k T_k((z - center) / half_width).
struct ChebyshevPlan {
  Enclosure enclosure;
  std::vector<cplx> coefficients;
  double truncation_tol = 1e-12;

  std::size_t terms() const { return coefficients.size(); }

  // e^{-itz} = e^{-itc} sum_k eps_k (-i)^k J_k(r t) T_k(x), eps_0 = 1, eps_k = 2.
  static ChebyshevPlan exponential(double t, const Enclosure& enc, double tol = 1e-12,
                                   std::size_t max_terms = 1u << 22) {
    if (!(tol > 0.0)) throw PreconditionError("truncation tolerance must be positive");
    ChebyshevPlan p{enc, {}, tol};
    const double tau = enc.half_width * std::fabs(t);
    const double rho = enc.bernstein_rho();
    const cplx phase = std::polar(1.0, -t * enc.center);
    const cplx mi = t >= 0.0 ? cplx(0, -1) : cplx(0, 1);  // J_k(-tau) = (-1)^k J_k(tau)
    // On the ellipse the terms behave like (e tau rho / 2k)^k, so the
    // series turns over near k = e tau rho / 2.
    double reach = rho > 1.0 ? std::max(tau, 0.5 * std::exp(1.0) * tau * rho) : tau;
    for (std::size_t extra = 64;; extra *= 2) {
      std::size_t n = static_cast<std::size_t>(std::ceil(reach)) + extra;
      if (n > max_terms) throw NumericalError("Chebyshev expansion needs more than max_terms terms");
      auto j = detail::bessel_j_sequence(tau, n);
      double growth = 1.0;
      for (std::size_t k = 0; k <= n; ++k, growth *= rho) {
        double w = k == 0 ? 1.0 : 2.0;
        if (k > reach && std::fabs(w * j[k]) * growth < 0.1 * tol) {
          cplx ik = 1.0;
          for (std::size_t m = 0; m <= k; ++m, ik *= mi)
            p.coefficients.push_back(phase * (m == 0 ? 1.0 : 2.0) * ik * j[m]);
          return p;
        }
      }
    }
  }

  // Coefficients of a real function from samples at M Chebyshev nodes
  // (a DCT-II); M doubles until the last tenth of the coefficients falls
  // below tol.  Only meaningful for real spectra.
  static ChebyshevPlan function(const std::function<double(double)>& f, const Enclosure& enc,
                                double tol = 1e-12, std::size_t max_nodes = 1u << 18) {
    if (enc.imag_extent > 0.0)
      throw PreconditionError("functional calculus needs a real spectral enclosure");
    if (!(tol > 0.0)) throw PreconditionError("truncation tolerance must be positive");
    for (std::size_t m = 64; m <= max_nodes; m *= 2) {
      std::vector<double> x(m), y(m);
      for (std::size_t j = 0; j < m; ++j)
        x[j] = f(enc.center + enc.half_width * std::cos(pi * (j + 0.5) / m));
      {
        std::lock_guard<std::mutex> lock(detail::FFTPlan::planner_mutex());
        fftw_plan plan = fftw_plan_r2r_1d(static_cast<int>(m), x.data(), y.data(), FFTW_REDFT10, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
      }
      double tail = 0.0;
      for (std::size_t k = m - m / 10; k < m; ++k) tail = std::max(tail, std::fabs(y[k]) / m);
      if (tail > 0.1 * tol) continue;
      ChebyshevPlan p{enc, {}, tol};
      std::size_t last = m;
      while (last > 1 && std::fabs(y[last - 1]) / m < 0.1 * tol) --last;
      for (std::size_t k = 0; k < last; ++k) p.coefficients.emplace_back(y[k] / m * (k == 0 ? 0.5 : 1.0));
      return p;
    }
    throw NumericalError("Chebyshev coefficients of f did not decay within max_nodes samples");
  }

  // sum_k c_k T_k(X) u with X = (H - c) / r, by the three-term recurrence.
  Vector apply(const LinearMap& h, const Vector& u) const {
    const double c = enclosure.center, r = enclosure.half_width;
    const double rho = enclosure.bernstein_rho();
    const double un = u.norm();
    auto x = [&](const Vector& v) -> Vector { return (h(v) - c * v) / r; };
    Vector acc = coefficients[0] * u;
    if (coefficients.size() == 1 || un == 0.0) return acc;
    Vector t0 = u, t1 = x(u);
    acc += coefficients[1] * t1;
    double bound = 10.0 * rho * un;
    for (std::size_t k = 2; k < coefficients.size(); ++k) {
      Vector t2 = 2.0 * x(t1) - t0;
      acc += coefficients[k] * t2;
      bound *= rho;
      // |T_k| <= 1 on [-1, 1] (rho^k on the ellipse); growth means the
      // spectrum is outside the enclosure
      if (t2.norm() > bound)
        throw NumericalError("Chebyshev recurrence diverged: spectrum is outside the enclosure");
      t0.swap(t1);
      t1.swap(t2);
    }
    return acc;
  }
};

// f = 1 on [lambda - eps_f, lambda + eps_f], 0 outside [lambda -+ 2 eps_f].
struct EnergyCutoff {
  double lambda = 1.0;
  double eps_f = 0.2;
  CutoffPhi phi{};

  EnergyCutoff() = default;
  EnergyCutoff(double lambda_, double eps_f_) : lambda(lambda_), eps_f(eps_f_) {
    if (!(eps_f > 0.0)) throw PreconditionError("energy cutoff needs eps_f > 0");
  }

  double operator()(double z) const { return phi.phi(std::fabs(z - lambda) / (2.0 * eps_f)); }
  EnergyInterval support() const { return {lambda - 2.0 * eps_f, lambda + 2.0 * eps_f}; }
  EnergyInterval plateau() const { return {lambda - eps_f, lambda + eps_f}; }
};

// e^{-itH} u for t >= 0.  With an absorber the single expansion would sum
// terms of size J_k(rt) rho^k that cancel to something small, so the time
// is cut into steps with r dt rho <= 2.
inline Vector evolve(const LinearMap& h, const Enclosure& enc, const Vector& u, double t, double tol = 1e-12) {
  if (t < 0.0) throw PreconditionError("evolve needs t >= 0; evolve the adjoint for negative times");
  if (t == 0.0) return u;
  const double rho = enc.bernstein_rho();
  if (rho == 1.0) return ChebyshevPlan::exponential(t, enc, tol).apply(h, u);
  const auto steps = static_cast<std::size_t>(std::ceil(t * enc.half_width * rho / 2.0));
  auto plan = ChebyshevPlan::exponential(t / steps, enc, tol / steps);
  Vector v = u;
  for (std::size_t s = 0; s < steps; ++s) v = plan.apply(h, v);
  return v;
}

inline Vector evolve(const Hamiltonian& h, const Vector& u, double t, double tol = 1e-12) {
  return evolve(h.map(), enclosure_of(h), u, t, tol);
}

// e^{-itH} as a linear map; the adjoint runs the same expansion at -t.
// Needs a CAP-free (hermitian) H.
inline LinearMap propagator(const Hamiltonian& h, double t, double tol = 1e-12) {
  if (h.has_cap()) throw PreconditionError("the propagator map needs a hermitian Hamiltonian");
  if (t == 0.0) return identity_map(h.dim());
  auto enc = enclosure_of(h);
  auto hm = h.map();
  auto fwd = std::make_shared<const ChebyshevPlan>(ChebyshevPlan::exponential(t, enc, tol));
  auto bwd = std::make_shared<const ChebyshevPlan>(ChebyshevPlan::exponential(-t, enc, tol));
  return LinearMap{h.dim(), [hm, fwd](const Vector& u) { return fwd->apply(hm, u); },
                   [hm, bwd](const Vector& u) { return bwd->apply(hm, u); }, -1, false};
}

inline Vector apply_function(const Hamiltonian& h, const std::function<double(double)>& f, const Vector& u,
                             double tol = 1e-12) {
  if (h.has_cap()) throw PreconditionError("functional calculus needs a hermitian Hamiltonian");
  return ChebyshevPlan::function(f, enclosure_of(h), tol).apply(h.map(), u);
}

inline Vector apply_f_of_H(const Hamiltonian& h, const EnergyCutoff& f, const Vector& u, double tol = 1e-12) {
  return apply_function(h, f, u, tol);
}

// f(H) as a self-adjoint linear map.
inline LinearMap function_map(const Hamiltonian& h, const std::function<double(double)>& f, double tol = 1e-12) {
  if (h.has_cap()) throw PreconditionError("functional calculus needs a hermitian Hamiltonian");
  auto plan = std::make_shared<const ChebyshevPlan>(ChebyshevPlan::function(f, enclosure_of(h), tol));
  auto hm = h.map();
  auto apply = [hm, plan](const Vector& u) { return plan->apply(hm, u); };
  return LinearMap{h.dim(), apply, apply, -1, true};
}

}  // namespace mlr
