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
#include <limits>
#include <string>
#include <vector>

#include "mlr/errors.hpp"
#include "mlr/types.hpp"

namespace mlr {

// Finite hopping rule  (H0 u)(n) = sum_m gamma_m u(n - m)  with symbol
// p0(xi) = sum_m gamma_m e^{i xi.m}.
class Stencil {
 public:
  Stencil(int dim, std::vector<std::vector<int>> offsets, std::vector<cplx> coeffs)
      : dim_(dim), offsets_(std::move(offsets)), coeffs_(std::move(coeffs)) {
    if (dim_ < 1) throw PreconditionError("stencil dimension must be >= 1");
    if (offsets_.size() != coeffs_.size())
      throw PreconditionError("stencil needs one coefficient per offset");
    if (offsets_.empty()) throw PreconditionError("stencil has no offsets");
    for (const auto& m : offsets_) {
      if (static_cast<int>(m.size()) != dim_)
        throw PreconditionError("stencil offset has the wrong dimension");
      bandwidth_ = std::max(bandwidth_, sup(m));
    }
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      auto mirror = offsets_[i];
      for (int& v : mirror) v = -v;
      auto it = std::find(offsets_.begin(), offsets_.end(), mirror);
      if (it == offsets_.end())
        throw PreconditionError("stencil is not symmetric: missing mirror offset");
      const cplx& g = coeffs_[std::distance(offsets_.begin(), it)];
      if (std::abs(g - std::conj(coeffs_[i])) > 1e-14 * (1.0 + std::abs(g)))
        throw PreconditionError("stencil is not symmetric: gamma_{-m} != conj(gamma_m)");
    }
  }

  // Nearest-neighbour Laplacian with p0(xi) = sum_i (1 - cos xi_i).
  static Stencil laplacian(int dim) {
    std::vector<std::vector<int>> off;
    std::vector<cplx> c;
    off.emplace_back(dim, 0);
    c.emplace_back(double(dim));
    for (int i = 0; i < dim; ++i) {
      for (int s : {-1, 1}) {
        std::vector<int> m(dim, 0);
        m[i] = s;
        off.push_back(m);
        c.emplace_back(-0.5);
      }
    }
    return Stencil(dim, off, c);
  }

  int dim() const { return dim_; }
  int bandwidth() const { return bandwidth_; }
  const std::vector<std::vector<int>>& offsets() const { return offsets_; }
  const std::vector<cplx>& coeffs() const { return coeffs_; }

  double coeff_l1() const {
    double s = 0.0;
    for (const auto& g : coeffs_) s += std::abs(g);
    return s;
  }

  cplx p0_complex(std::span<const double> xi) const {
    cplx s = 0.0;
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
      double ph = 0.0;
      for (int i = 0; i < dim_; ++i) ph += xi[i] * offsets_[k][i];
      s += coeffs_[k] * std::polar(1.0, ph);
    }
    return s;
  }

  double p0(std::span<const double> xi) const { return p0_complex(xi).real(); }

  std::vector<cplx> velocity_complex(std::span<const double> xi) const {
    std::vector<cplx> v(dim_, 0.0);
    for (std::size_t k = 0; k < offsets_.size(); ++k) {
      double ph = 0.0;
      for (int i = 0; i < dim_; ++i) ph += xi[i] * offsets_[k][i];
      cplx e = coeffs_[k] * std::polar(1.0, ph) * cplx(0.0, 1.0);
      for (int i = 0; i < dim_; ++i) v[i] += e * double(offsets_[k][i]);
    }
    return v;
  }

  // Group velocity v = grad p0.
  std::vector<double> velocity(std::span<const double> xi) const {
    auto vc = velocity_complex(xi);
    std::vector<double> v(dim_);
    for (int i = 0; i < dim_; ++i) v[i] = vc[i].real();
    return v;
  }

  double p0(double xi) const { return p0(std::span<const double>(&xi, 1)); }
  double velocity(double xi) const { return velocity(std::span<const double>(&xi, 1))[0]; }

 private:
  static int sup(const std::vector<int>& m) {
    int s = 0;
    for (int v : m) s = std::max(s, std::abs(v));
    return s;
  }

  int dim_;
  std::vector<std::vector<int>> offsets_;
  std::vector<cplx> coeffs_;
  int bandwidth_ = 0;
};

struct EnergyInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double e) const { return e >= lo && e <= hi; }
  double center() const { return 0.5 * (lo + hi); }
  double half_width() const { return 0.5 * (hi - lo); }
};

struct ShellScan {
  double min_speed = 0.0;      // min |v| over sampled xi with p0(xi) in the window
  double max_speed = 0.0;
  long samples_on_shell = 0;
};

namespace detail {

// Calls f(xi) on every point of a grid_n^d torus grid.
template <class F>
void for_each_torus_point(int dim, long grid_n, F&& f) {
  std::vector<long> k(dim, 0);
  std::vector<double> xi(dim, 0.0);
  while (true) {
    for (int i = 0; i < dim; ++i) xi[i] = two_pi * k[i] / grid_n;
    f(std::span<const double>(xi));
    int i = dim - 1;
    while (i >= 0 && ++k[i] == grid_n) {
      k[i] = 0;
      --i;
    }
    if (i < 0) break;
  }
}

}  // namespace detail

// Minimum group speed over the part of a torus grid that p0 maps into I.
inline ShellScan check_energy_window(const Stencil& st, EnergyInterval window, long grid_n = 4096) {
  if (grid_n < 64) throw PreconditionError("energy window scan needs grid_n >= 64");
  if (!(window.lo <= window.hi)) throw PreconditionError("energy window is empty (lo > hi)");
  ShellScan scan;
  scan.min_speed = std::numeric_limits<double>::infinity();
  double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
  detail::for_each_torus_point(st.dim(), grid_n, [&](std::span<const double> xi) {
    double e = st.p0(xi);
    pmin = std::min(pmin, e);
    pmax = std::max(pmax, e);
    if (!window.contains(e)) return;
    double s = euclidean_norm(st.velocity(xi));
    scan.min_speed = std::min(scan.min_speed, s);
    scan.max_speed = std::max(scan.max_speed, s);
    ++scan.samples_on_shell;
  });
  if (scan.samples_on_shell == 0) {
    // A thin window can fall between grid samples while still meeting the
    // range of p0; only a window outside [min p0, max p0] is empty.
    if (window.hi < pmin || window.lo > pmax)
      throw EmptyShellError("p0 takes no value in [" + std::to_string(window.lo) + ", " +
                            std::to_string(window.hi) + "]");
    throw PreconditionError("energy window is thinner than the sampling grid resolves");
  }
  return scan;
}

// Rejects windows whose shell comes closer than `floor` to a critical point.
inline ShellScan validate_energy_window(const Stencil& st, EnergyInterval window,
                                        double floor = 1e-2, long grid_n = 4096) {
  auto scan = check_energy_window(st, window, grid_n);
  if (scan.min_speed < floor)
    throw CriticalValueError("energy window [" + std::to_string(window.lo) + ", " +
                             std::to_string(window.hi) +
                             "] contains a critical value of p0 (min |v| = " +
                             std::to_string(scan.min_speed) + ")");
  return scan;
}

}  // namespace mlr
