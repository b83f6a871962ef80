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

#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include "mlr/box.hpp"
#include "mlr/fft.hpp"
#include "mlr/linear_map.hpp"
#include "mlr/symbol.hpp"

namespace mlr {

// Warnings go through one replaceable sink so tests and the CLI can
// collect them.
using WarningSink = std::function<void(const std::string&)>;

inline WarningSink& warning_sink() {
  static WarningSink sink = [](const std::string& msg) { std::cerr << "warning: " << msg << "\n"; };
  return sink;
}

inline void warn(const std::string& msg) {
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  warning_sink()(msg);
}

// Values of c on the momentum grid of the box, in storage order.
inline Vector momentum_grid_values(const Box& box, const Symbol::Factor& c) {
  Vector v(box.size());
  for (Eigen::Index k = 0; k < box.size(); ++k) {
    auto xi = box.momentum_point(k);
    v[k] = c(xi);
  }
  return v;
}

inline LinearMap fourier_multiplier_from_grid(const Box& box, Vector grid) {
  auto fft = std::make_shared<const BoxFFT>(box);
  Vector conj_grid = grid.conjugate();
  bool real = grid.imag().cwiseAbs().maxCoeff() == 0.0;
  auto f = [fft, grid](const Vector& u) {
    Vector w = u;
    fft->analyze(w);
    w.array() *= grid.array();
    fft->synthesize(w);
    return w;
  };
  auto b = [fft, conj_grid](const Vector& u) {
    Vector w = u;
    fft->analyze(w);
    w.array() *= conj_grid.array();
    fft->synthesize(w);
    return w;
  };
  return LinearMap{box.size(), f, b, -1, real};
}

// inverse DFT o multiply-by-c o DFT on the periodic box.
inline LinearMap fourier_multiplier(const Symbol::Factor& c, const Box& box) {
  return fourier_multiplier_from_grid(box, momentum_grid_values(box, c));
}

// u(n) -> <n>^s u(n).
inline LinearMap position_weight(double s, const Box& box) {
  Vector d(box.size());
  for (Eigen::Index i = 0; i < box.size(); ++i) d[i] = std::pow(1.0 + std::pow(Box::euclid(box.site(i)), 2), 0.5 * s);
  return diagonal_map(std::move(d));
}

// u(n) -> b(x_n) u(n) with x_n = -h n the phase-space position at scale h.
inline Vector scaled_position_values(const Box& box, double h, const Symbol::Factor& b) {
  Vector v(box.size());
  std::vector<double> x(box.dim());
  for (Eigen::Index i = 0; i < box.size(); ++i) {
    auto n = box.site(i);
    for (int d = 0; d < box.dim(); ++d) x[d] = -h * n[d];
    v[i] = b(x);
  }
  return v;
}

enum class Quantization { left, right };
enum class ResolutionPolicy { enforce, warn_only, off };

struct QuantizeOptions {
  Quantization quantization = Quantization::left;
  ResolutionPolicy resolution = ResolutionPolicy::enforce;
  double warn_tail = 1e-10;
  double error_tail = 1e-6;
  Eigen::Index dense_limit = 8192;  // largest box for non-separable symbols
};

namespace detail {

// Fraction of the l2 mass of a convolution kernel (given in storage order,
// index j meaning m = j mod side per coordinate) carried by |m|_inf > side/4.
inline double kernel_tail_fraction(const Box& box, const Vector& kernel) {
  double total = kernel.squaredNorm();
  if (total == 0.0) return 0.0;
  const int side = box.side();
  double tail = 0.0;
  for (Eigen::Index j = 0; j < kernel.size(); ++j) {
    Eigen::Index idx = j;
    int far = 0;
    for (int d = 0; d < box.dim(); ++d) {
      int k = static_cast<int>(idx % side);
      idx /= side;
      int m = std::min(k, side - k);
      far = std::max(far, m);
    }
    if (4 * far > side) tail += std::norm(kernel[j]);
  }
  return tail / total;
}

inline void check_resolution(double tail, const QuantizeOptions& opt, const std::string& what) {
  if (opt.resolution == ResolutionPolicy::off) return;
  if (tail > opt.error_tail && opt.resolution == ResolutionPolicy::enforce) {
    std::ostringstream os;
    os << what << ": momentum grid does not resolve the symbol (kernel tail fraction " << tail
       << " > " << opt.error_tail << "); enlarge the box";
    throw ResolutionError(os.str());
  }
  if (tail > opt.warn_tail) {
    std::ostringstream os;
    os << what << ": kernel tail fraction " << tail << " exceeds " << opt.warn_tail;
    warn(os.str());
  }
}

// Kernel index of n - n' for storage indices i, i'.
inline Eigen::Index difference_index(const Box& box, Eigen::Index i, Eigen::Index ip) {
  const int side = box.side();
  Eigen::Index out = 0, a = i, b = ip, stride = 1;
  for (int d = 0; d < box.dim(); ++d) {
    int ka = static_cast<int>(a % side), kb = static_cast<int>(b % side);
    a /= side;
    b /= side;
    int m = ((ka - kb) % side + side) % side;
    out += m * stride;
    stride *= side;
  }
  return out;
}

}  // namespace detail

// Semiclassical left (or right) quantization on the box,
//   (Au)(n) = side^{-d} sum_k a(x_n, xi_k) u^(xi_k) e^{-i n.xi_k},
// with x_n = -h n.  Equivalently a periodic convolution with the kernel
// a^(x_n, m) obtained by DFT of a(x_n, .) on the momentum grid.
inline LinearMap op_h(const Symbol& a, double h, const Box& box, const QuantizeOptions& opt = {}) {
  if (!(h > 0.0 && h <= 1.0)) throw PreconditionError("op_h needs 0 < h <= 1");
  if (a.dim() != box.dim()) throw PreconditionError("symbol and box dimensions differ");
  BoxFFT fft(box);

  if (a.is_separable_sum()) {
    struct Piece {
      Vector b, bc, c, cc;
    };
    auto pieces = std::make_shared<std::vector<Piece>>();
    for (const auto& term : a.terms()) {
      Piece p;
      p.b = scaled_position_values(box, h, term.x);
      p.c = momentum_grid_values(box, term.xi);
      p.bc = p.b.conjugate();
      p.cc = p.c.conjugate();
      Vector kernel = p.c;
      fft.synthesize(kernel);
      detail::check_resolution(detail::kernel_tail_fraction(box, kernel), opt, "op_h");
      pieces->push_back(std::move(p));
    }
    auto fftp = std::make_shared<const BoxFFT>(box);
    const Eigen::Index n = box.size();
    auto multiplier = [fftp](const Vector& u, const Vector& c) {
      Vector w = u;
      fftp->analyze(w);
      w.array() *= c.array();
      fftp->synthesize(w);
      return w;
    };
    LinearMap::Action fwd, bwd;
    if (opt.quantization == Quantization::left) {
      fwd = [pieces, multiplier, n](const Vector& u) {
        Vector out = Vector::Zero(n);
        for (const auto& p : *pieces) out += p.b.cwiseProduct(multiplier(u, p.c));
        return out;
      };
      bwd = [pieces, multiplier, n](const Vector& u) {
        Vector out = Vector::Zero(n);
        for (const auto& p : *pieces) out += multiplier(p.bc.cwiseProduct(u), p.cc);
        return out;
      };
    } else {
      fwd = [pieces, multiplier, n](const Vector& u) {
        Vector out = Vector::Zero(n);
        for (const auto& p : *pieces) out += multiplier(p.b.cwiseProduct(u), p.c);
        return out;
      };
      bwd = [pieces, multiplier, n](const Vector& u) {
        Vector out = Vector::Zero(n);
        for (const auto& p : *pieces) out += p.bc.cwiseProduct(multiplier(u, p.cc));
        return out;
      };
    }
    return LinearMap{n, fwd, bwd, -1, false};
  }

  // General symbol: assemble the kernel densely.
  const Eigen::Index n = box.size();
  if (n > opt.dense_limit)
    throw PreconditionError("op_h of a non-separable symbol is limited to boxes of " +
                            std::to_string(opt.dense_limit) + " sites");
  Matrix k(n, n);
  std::vector<double> x(box.dim());
  double worst_tail = 0.0;
  Vector row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto site = box.site(i);
    for (int d = 0; d < box.dim(); ++d) x[d] = -h * site[d];
    for (Eigen::Index q = 0; q < n; ++q) {
      auto xi = box.momentum_point(q);
      row[q] = a(x, xi);
    }
    fft.synthesize(row);
    worst_tail = std::max(worst_tail, detail::kernel_tail_fraction(box, row));
    // row[j] = a^(x_n, m) with m = j (mod side); place it by quantization.
    for (Eigen::Index ip = 0; ip < n; ++ip) {
      Eigen::Index m = detail::difference_index(box, i, ip);
      if (opt.quantization == Quantization::left)
        k(i, ip) = row[m];
      else
        k(ip, i) = row[detail::difference_index(box, ip, i)];
    }
  }
  detail::check_resolution(worst_tail, opt, "op_h");
  return from_dense(std::move(k));
}

// i (AB - BA) as a matrix-free map.
inline LinearMap commutator_action(const LinearMap& a, const LinearMap& b) {
  check_dims(a, b);
  auto f = [a, b](const Vector& u) {
    return (cplx(0.0, 1.0) * (a.forward(b.forward(u)) - b.forward(a.forward(u)))).eval();
  };
  // (i(AB - BA))^* = i (A^* B^* - B^* A^*)
  auto g = [a, b](const Vector& u) {
    return (cplx(0.0, 1.0) * (a.backward(b.backward(u)) - b.backward(a.backward(u)))).eval();
  };
  return LinearMap{a.dim, f, g, -1, a.hermitian && b.hermitian};
}

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;  // Rayleigh residual |A*A x - rho x| / rho at exit
};

struct NormOptions {
  double tol = 1e-3;
  int max_iter = 3000;
  int min_iter = 4;  // a lucky start can satisfy the residual test for a smaller singular value
  std::uint64_t seed = 0x5EED;
};

// Power iteration on A*A from a seeded random start.  Stops once the
// Rayleigh residual certifies the singular value to relative accuracy tol.
inline NormEstimate operator_norm(const LinearMap& a, const NormOptions& opt = {}) {
  if (!(opt.tol > 0.0 && opt.tol <= 0.1)) throw PreconditionError("operator_norm needs tol in (0, 0.1]");
  std::mt19937_64 rng(opt.seed);
  Vector x = random_vector(a.dim, rng);
  x.normalize();
  double rho = 0.0, res = 0.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Vector y = a.forward(x);
    Vector z = a.backward(y);
    rho = y.squaredNorm();
    double zn = z.norm();
    if (rho == 0.0 || zn == 0.0) return {0.0, it, 0.0};
    res = (z - rho * x).norm() / rho;
    // |sigma - sigma_true| / sigma <= res / 2 for the eigenvalue closest to rho
    if (res <= opt.tol && it >= opt.min_iter) return {std::sqrt(rho), it, res};
    x = z / zn;
  }
  throw ConvergenceError("operator_norm did not converge", std::sqrt(rho),
                         std::sqrt(rho * (1.0 + res)));
}

}  // namespace mlr
