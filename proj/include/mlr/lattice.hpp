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

#include <memory>
#include <optional>
#include <string>

#include "mlr/box.hpp"
#include "mlr/linear_map.hpp"
#include "mlr/stencil.hpp"

namespace mlr {

class Potential {
 public:
  enum class Form { zero, power_law, dipole, table };

  static Potential zero() { return Potential(Form::zero, 1.0, 0.0); }

  // c (1 + |n|^2)^{-mu/2}
  static Potential power_law(double amplitude, double mu) {
    return Potential(Form::power_law, mu, amplitude);
  }

  // c n_1 (1 + |n|^2)^{-(mu+1)/2}
  static Potential dipole(double amplitude, double mu) {
    return Potential(Form::dipole, mu, amplitude);
  }

  // Values on a specific box, indexed like the box sites.
  static Potential table(const Box& box, RealVector values, double mu) {
    if (values.size() != box.size())
      throw PreconditionError("potential table does not match the box size");
    Potential p(Form::table, mu, 1.0);
    p.table_box_ = box;
    p.table_ = std::move(values);
    return p;
  }

  Form form() const { return form_; }
  double mu() const { return mu_; }
  double amplitude() const { return amplitude_; }

  double operator()(const std::vector<int>& n) const {
    double r2 = 0.0;
    for (int v : n) r2 += double(v) * v;
    switch (form_) {
      case Form::zero:
        return 0.0;
      case Form::power_law:
        return amplitude_ * std::pow(1.0 + r2, -0.5 * mu_);
      case Form::dipole:
        return amplitude_ * n[0] * std::pow(1.0 + r2, -0.5 * (mu_ + 1.0));
      case Form::table: {
        auto idx = table_box_->index(n);
        return idx < 0 ? 0.0 : table_[idx];
      }
    }
    return 0.0;
  }

  RealVector sample(const Box& box) const {
    RealVector v(box.size());
    for (Eigen::Index i = 0; i < box.size(); ++i) v[i] = (*this)(box.site(i));
    return v;
  }

  // Smallest C with |V(n)| <= C (1 + |n|)^{-mu} on the box.
  double decay_constant(const Box& box) const {
    double c = 0.0;
    for (Eigen::Index i = 0; i < box.size(); ++i) {
      auto n = box.site(i);
      c = std::max(c, std::fabs((*this)(n)) * std::pow(1.0 + Box::euclid(n), mu_));
    }
    return c;
  }

  std::string name() const {
    switch (form_) {
      case Form::zero: return "none";
      case Form::power_law: return "power";
      case Form::dipole: return "dipole";
      case Form::table: return "table";
    }
    return "?";
  }

 private:
  Potential(Form f, double mu, double amp) : form_(f), mu_(mu), amplitude_(amp) {
    if (!(mu > 0.0 && mu <= 1.0)) throw PreconditionError("potential decay exponent mu must lie in (0, 1]");
  }

  Form form_;
  double mu_;
  double amplitude_;
  std::optional<Box> table_box_;
  RealVector table_;
};

// Cubic absorbing ramp W(n) = eta ((|n|_inf - (L - w)) / w)^3 in the outer
// layer of width w.
struct CAPProfile {
  int width = 0;
  double strength = 1.0;

  static CAPProfile standard(int radius) { return CAPProfile{std::max(1, radius / 8), 1.0}; }

  double operator()(const std::vector<int>& n, int radius) const {
    int s = Box::sup_norm(n);
    int inner = radius - width;
    if (s <= inner) return 0.0;
    double r = double(s - inner) / width;
    return strength * r * r * r;
  }
};

enum class Boundary { dirichlet, periodic };

// H = H0 + V - i W on a finite box.  Immutable; apply() is re-entrant.
class Hamiltonian {
 public:
  Hamiltonian(const Stencil& st, const Potential& pot, const Box& box,
              std::optional<CAPProfile> cap = std::nullopt, Boundary bc = Boundary::dirichlet)
      : stencil_(st), box_(box), cap_(cap), boundary_(bc) {
    if (st.dim() != box.dim()) throw PreconditionError("stencil and box dimensions differ");
    int need = st.bandwidth() + (cap ? cap->width : 0);
    if (box.radius() <= need)
      throw PreconditionError("box radius must exceed stencil bandwidth + CAP width");
    if (cap && (cap->width < 1 || !(cap->strength > 0.0)))
      throw PreconditionError("CAP needs width >= 1 and strength > 0");
    potential_ = pot.sample(box);
    potential_decay_constant_ = pot.decay_constant(box);
    absorber_ = RealVector::Zero(box.size());
    if (cap)
      for (Eigen::Index i = 0; i < box.size(); ++i) absorber_[i] = (*cap)(box.site(i), box.radius());
    build_neighbours();
  }

  const Stencil& stencil() const { return stencil_; }
  const Box& box() const { return box_; }
  Eigen::Index dim() const { return box_.size(); }
  const RealVector& potential() const { return potential_; }
  const RealVector& absorber() const { return absorber_; }
  bool has_cap() const { return cap_.has_value(); }
  std::optional<CAPProfile> cap() const { return cap_; }
  Boundary boundary() const { return boundary_; }
  double potential_decay_constant() const { return potential_decay_constant_; }

  // Radius of the CAP-free inner box.
  int inner_radius() const { return box_.radius() - (cap_ ? cap_->width : 0); }

  bool is_inner(Eigen::Index i) const { return Box::sup_norm(box_.site(i)) <= inner_radius(); }

  // (H u) with sign = -1 giving H0 + V - iW and sign = +1 the adjoint
  // H0 + V + iW.
  Vector apply_signed(const Vector& u, double cap_sign) const {
    const Eigen::Index n = box_.size();
    const std::size_t k = stencil_.coeffs().size();
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      cplx s = cplx(potential_[i], cap_sign * absorber_[i]) * u[i];
      const Eigen::Index* nb = &neighbours_[i * k];
      for (std::size_t j = 0; j < k; ++j)
        if (nb[j] >= 0) s += coeffs_[j] * u[nb[j]];
      out[i] = s;
    }
    return out;
  }

  Vector apply(const Vector& u) const { return apply_signed(u, -1.0); }
  Vector adjoint_apply(const Vector& u) const { return apply_signed(u, +1.0); }

  LinearMap map() const {
    auto self = std::make_shared<const Hamiltonian>(*this);
    return LinearMap{dim(), [self](const Vector& u) { return self->apply(u); },
                     [self](const Vector& u) { return self->adjoint_apply(u); },
                     stencil_.bandwidth(), !has_cap()};
  }

  // Band entries of H - z (cap_sign as in apply_signed) for the 1-d banded
  // solver; entry(i, j) for |i - j| <= bandwidth.
  cplx entry(Eigen::Index i, Eigen::Index j, double cap_sign = -1.0) const {
    cplx s = 0.0;
    if (i == j) s += cplx(potential_[i], cap_sign * absorber_[i]);
    const std::size_t k = stencil_.coeffs().size();
    for (std::size_t m = 0; m < k; ++m)
      if (neighbours_[i * k + m] == j) s += coeffs_[m];
    return s;
  }

  Matrix dense(double cap_sign = -1.0) const {
    const Eigen::Index n = dim();
    Matrix m = Matrix::Zero(n, n);
    const std::size_t k = stencil_.coeffs().size();
    for (Eigen::Index i = 0; i < n; ++i) {
      m(i, i) += cplx(potential_[i], cap_sign * absorber_[i]);
      for (std::size_t j = 0; j < k; ++j)
        if (neighbours_[i * k + j] >= 0) m(i, neighbours_[i * k + j]) += coeffs_[j];
    }
    return m;
  }

  // Radius of a disc containing the numerical range:
  // sum |gamma| + max |V| + max W.
  double spectral_bound() const {
    double vmax = potential_.size() ? potential_.cwiseAbs().maxCoeff() : 0.0;
    double wmax = absorber_.size() ? absorber_.maxCoeff() : 0.0;
    return stencil_.coeff_l1() + vmax + wmax;
  }

  // Interval containing the spectrum of the hermitian part: the on-site
  // coefficient shifts the band, the hopping terms spread it.
  EnergyInterval real_enclosure() const {
    double shift = 0.0, spread = 0.0;
    for (std::size_t j = 0; j < stencil_.offsets().size(); ++j) {
      const auto& m = stencil_.offsets()[j];
      if (std::all_of(m.begin(), m.end(), [](int v) { return v == 0; }))
        shift += stencil_.coeffs()[j].real();
      else
        spread += std::abs(stencil_.coeffs()[j]);
    }
    return {potential_.minCoeff() + shift - spread, potential_.maxCoeff() + shift + spread};
  }

 private:
  void build_neighbours() {
    const Eigen::Index n = box_.size();
    const auto& off = stencil_.offsets();
    const std::size_t k = off.size();
    neighbours_.assign(n * k, -1);
    coeffs_ = stencil_.coeffs();
    for (Eigen::Index i = 0; i < n; ++i) {
      auto site = box_.site(i);
      for (std::size_t j = 0; j < k; ++j) {
        std::vector<int> src(site);
        for (int d = 0; d < box_.dim(); ++d) src[d] -= off[j][d];
        neighbours_[i * k + j] =
            boundary_ == Boundary::periodic ? box_.periodic_index(src) : box_.index(src);
      }
    }
  }

  Stencil stencil_;
  Box box_;
  std::optional<CAPProfile> cap_;
  Boundary boundary_;
  RealVector potential_;
  RealVector absorber_;
  double potential_decay_constant_ = 0.0;
  std::vector<Eigen::Index> neighbours_;
  std::vector<cplx> coeffs_;
};

inline Hamiltonian assemble_hamiltonian(const Stencil& st, const Potential& pot, const Box& box,
                                        std::optional<CAPProfile> cap = std::nullopt,
                                        Boundary bc = Boundary::dirichlet) {
  return Hamiltonian(st, pot, box, cap, bc);
}

}  // namespace mlr
