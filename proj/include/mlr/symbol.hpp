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

#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "mlr/errors.hpp"
#include "mlr/types.hpp"

namespace mlr {

enum class SymbolClass { S, Sh, Sht };  // S^m, S^m_h, S^m_{h,t}

// Bounding description of the numerical support: a ball in x times a
// (torus) ball in xi.  Either radius may be infinite.
struct SupportBall {
  Point x_center;
  double x_radius = std::numeric_limits<double>::infinity();
  Point xi_center;
  double xi_radius = std::numeric_limits<double>::infinity();
};

// A phase-space function a(x, xi) on R^d x T^d.
//
// Symbols that are sums of products b_k(x) c_k(xi) keep that structure in
// `terms`, which lets op_h use FFT multipliers instead of a dense kernel.
class Symbol {
 public:
  using Eval = std::function<cplx(std::span<const double>, std::span<const double>)>;
  using Factor = std::function<cplx(std::span<const double>)>;
  struct Term {
    Factor x;
    Factor xi;
  };

  Symbol() = default;

  static Symbol general(int dim, Eval f) {
    Symbol s;
    s.dim_ = dim;
    s.eval_ = std::move(f);
    return s;
  }

  static Symbol separable(int dim, Factor b, Factor c) {
    Symbol s;
    s.dim_ = dim;
    s.terms_.push_back({std::move(b), std::move(c)});
    return s;
  }

  static Symbol constant(int dim, cplx value) {
    return separable(dim, [](std::span<const double>) { return cplx(1.0); },
                     [value](std::span<const double>) { return value; });
  }

  static Symbol of_momentum(int dim, Factor c) {
    return separable(dim, [](std::span<const double>) { return cplx(1.0); }, std::move(c));
  }

  static Symbol of_position(int dim, Factor b) {
    return separable(dim, std::move(b), [](std::span<const double>) { return cplx(1.0); });
  }

  int dim() const { return dim_; }
  bool is_separable_sum() const { return !terms_.empty() && !eval_; }
  const std::vector<Term>& terms() const { return terms_; }

  cplx operator()(std::span<const double> x, std::span<const double> xi) const {
    if (eval_) return eval_(x, xi);
    cplx s = 0.0;
    for (const auto& t : terms_) s += t.x(x) * t.xi(xi);
    return s;
  }

  cplx operator()(double x, double xi) const {
    return (*this)(std::span<const double>(&x, 1), std::span<const double>(&xi, 1));
  }

  // Metadata.
  SymbolClass symbol_class() const { return class_; }
  double order() const { return order_; }
  std::optional<double> h() const { return h_; }
  std::optional<double> t() const { return t_; }
  const std::optional<SupportBall>& support() const { return support_; }
  double bound() const { return bound_; }
  bool real_valued() const { return real_; }

  Symbol& tag(SymbolClass c, double order = 0.0, std::optional<double> h = std::nullopt,
              std::optional<double> t = std::nullopt) {
    class_ = c;
    order_ = order;
    h_ = h;
    t_ = t;
    return *this;
  }
  Symbol& with_support(SupportBall b) {
    support_ = std::move(b);
    return *this;
  }
  Symbol& with_bound(double b) {
    bound_ = b;
    return *this;
  }
  Symbol& real(bool r = true) {
    real_ = r;
    return *this;
  }

  friend Symbol operator+(const Symbol& a, const Symbol& b) {
    if (a.dim_ != b.dim_) throw PreconditionError("symbol dimensions differ");
    Symbol s;
    s.dim_ = a.dim_;
    if (a.is_separable_sum() && b.is_separable_sum()) {
      s.terms_ = a.terms_;
      s.terms_.insert(s.terms_.end(), b.terms_.begin(), b.terms_.end());
    } else {
      s.eval_ = [a, b](std::span<const double> x, std::span<const double> xi) {
        return a(x, xi) + b(x, xi);
      };
    }
    s.class_ = std::max(a.class_, b.class_);
    s.order_ = std::max(a.order_, b.order_);
    s.bound_ = a.bound_ + b.bound_;
    s.real_ = a.real_ && b.real_;
    s.h_ = a.h_ ? a.h_ : b.h_;
    s.t_ = a.t_ ? a.t_ : b.t_;
    return s;
  }

  friend Symbol operator*(cplx c, const Symbol& a) {
    Symbol s = a;
    if (s.is_separable_sum()) {
      for (auto& term : s.terms_) {
        auto f = term.xi;
        term.xi = [f, c](std::span<const double> xi) { return c * f(xi); };
      }
    } else {
      auto f = a.eval_;
      s.eval_ = [f, c](std::span<const double> x, std::span<const double> xi) {
        return c * f(x, xi);
      };
    }
    s.bound_ = std::abs(c) * a.bound_;
    s.real_ = a.real_ && c.imag() == 0.0;
    return s;
  }

  // Pointwise product; stays separable only when both factors are single
  // products.
  friend Symbol product(const Symbol& a, const Symbol& b) {
    if (a.dim_ != b.dim_) throw PreconditionError("symbol dimensions differ");
    Symbol s;
    s.dim_ = a.dim_;
    if (a.is_separable_sum() && b.is_separable_sum() && a.terms_.size() == 1 &&
        b.terms_.size() == 1) {
      auto ta = a.terms_[0], tb = b.terms_[0];
      s.terms_.push_back({[ta, tb](std::span<const double> x) { return ta.x(x) * tb.x(x); },
                          [ta, tb](std::span<const double> xi) { return ta.xi(xi) * tb.xi(xi); }});
    } else {
      s.eval_ = [a, b](std::span<const double> x, std::span<const double> xi) {
        return a(x, xi) * b(x, xi);
      };
    }
    s.class_ = std::max(a.class_, b.class_);
    s.order_ = a.order_ + b.order_;
    s.bound_ = a.bound_ * b.bound_;
    s.real_ = a.real_ && b.real_;
    s.h_ = a.h_ ? a.h_ : b.h_;
    s.t_ = a.t_ ? a.t_ : b.t_;
    return s;
  }

 private:
  int dim_ = 1;
  Eval eval_;
  std::vector<Term> terms_;
  SymbolClass class_ = SymbolClass::S;
  double order_ = 0.0;
  std::optional<double> h_;
  std::optional<double> t_;
  std::optional<SupportBall> support_;
  double bound_ = std::numeric_limits<double>::quiet_NaN();
  bool real_ = false;
};

}  // namespace mlr
