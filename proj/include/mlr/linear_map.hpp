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

#include <cstdint>
#include <functional>
#include <random>
#include <utility>

#include "mlr/errors.hpp"
#include "mlr/types.hpp"

namespace mlr {

// A matrix-free linear operator on C^dim together with its adjoint.
//
// Everything captured by the closures must be immutable after
// construction, so a LinearMap can be applied from several threads at once.
struct LinearMap {
  using Action = std::function<Vector(const Vector&)>;

  Eigen::Index dim = 0;
  Action forward;
  Action backward;  // adjoint action
  int bandwidth = -1;  // -1: not banded / unknown
  bool hermitian = false;

  Vector apply(const Vector& u) const { return forward(u); }
  Vector adjoint_apply(const Vector& u) const { return backward(u); }
  Vector operator()(const Vector& u) const { return forward(u); }

  LinearMap adjoint() const {
    return LinearMap{dim, backward, forward, bandwidth, hermitian};
  }
};

inline LinearMap identity_map(Eigen::Index dim) {
  auto id = [](const Vector& u) { return u; };
  return LinearMap{dim, id, id, 0, true};
}

inline LinearMap zero_map(Eigen::Index dim) {
  auto z = [dim](const Vector&) { return Vector::Zero(dim).eval(); };
  return LinearMap{dim, z, z, 0, true};
}

inline LinearMap scaled(const LinearMap& a, cplx c) {
  return LinearMap{a.dim, [a, c](const Vector& u) { return (c * a.forward(u)).eval(); },
                   [a, c](const Vector& u) { return (std::conj(c) * a.backward(u)).eval(); },
                   a.bandwidth, a.hermitian && c.imag() == 0.0};
}

inline void check_dims(const LinearMap& a, const LinearMap& b) {
  if (a.dim != b.dim) throw PreconditionError("linear maps have different dimensions");
}

// a o b, i.e. u -> a(b(u)).
inline LinearMap compose(const LinearMap& a, const LinearMap& b) {
  check_dims(a, b);
  int bw = (a.bandwidth >= 0 && b.bandwidth >= 0) ? a.bandwidth + b.bandwidth : -1;
  return LinearMap{a.dim, [a, b](const Vector& u) { return a.forward(b.forward(u)); },
                   [a, b](const Vector& u) { return b.backward(a.backward(u)); }, bw, false};
}

inline LinearMap compose(std::initializer_list<LinearMap> maps) {
  auto it = maps.begin();
  LinearMap out = *it;
  for (++it; it != maps.end(); ++it) out = compose(out, *it);
  return out;
}

inline LinearMap sum(const LinearMap& a, const LinearMap& b) {
  check_dims(a, b);
  int bw = (a.bandwidth >= 0 && b.bandwidth >= 0) ? std::max(a.bandwidth, b.bandwidth) : -1;
  return LinearMap{a.dim, [a, b](const Vector& u) { return (a.forward(u) + b.forward(u)).eval(); },
                   [a, b](const Vector& u) { return (a.backward(u) + b.backward(u)).eval(); }, bw,
                   a.hermitian && b.hermitian};
}

inline LinearMap difference(const LinearMap& a, const LinearMap& b) {
  return sum(a, scaled(b, -1.0));
}

// Multiplication by a fixed complex vector.
inline LinearMap diagonal_map(Vector d) {
  const Eigen::Index n = d.size();
  bool real = d.imag().cwiseAbs().maxCoeff() == 0.0 || n == 0;
  Vector dc = d.conjugate();
  return LinearMap{n, [d](const Vector& u) { return d.cwiseProduct(u).eval(); },
                   [dc](const Vector& u) { return dc.cwiseProduct(u).eval(); }, 0, real};
}

// The hermitian part (A + A*)/2.
inline LinearMap hermitian_part(const LinearMap& a) {
  auto f = [a](const Vector& u) { return (0.5 * (a.forward(u) + a.backward(u))).eval(); };
  return LinearMap{a.dim, f, f, a.bandwidth, true};
}

inline Matrix to_dense(const LinearMap& a) {
  Matrix m(a.dim, a.dim);
  Vector e = Vector::Zero(a.dim);
  for (Eigen::Index j = 0; j < a.dim; ++j) {
    e[j] = 1.0;
    m.col(j) = a.forward(e);
    e[j] = 0.0;
  }
  return m;
}

inline LinearMap from_dense(Matrix m) {
  const Eigen::Index n = m.rows();
  Matrix mh = m.adjoint();
  bool herm = (m - mh).cwiseAbs().maxCoeff() == 0.0;
  return LinearMap{n, [m](const Vector& u) { return (m * u).eval(); },
                   [mh](const Vector& u) { return (mh * u).eval(); }, -1, herm};
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
  return v;
}

// Largest relative mismatch |<Au,v> - <u,A*v>| / (|u||v|) over random pairs.
inline double adjoint_mismatch(const LinearMap& a, int pairs = 20, std::uint64_t seed = 0x5EED) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Vector u = random_vector(a.dim, rng);
    Vector v = random_vector(a.dim, rng);
    cplx lhs = v.dot(a.forward(u));   // <Au, v> written as v^* (Au)
    cplx rhs = a.backward(v).dot(u);  // <u, A*v>
    worst = std::max(worst, std::abs(lhs - rhs) / (u.norm() * v.norm()));
  }
  return worst;
}

}  // namespace mlr
