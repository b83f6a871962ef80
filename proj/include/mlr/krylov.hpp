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
#include <vector>

#include "mlr/types.hpp"

namespace mlr {

struct GmresOptions {
  int restart = 60;
  int max_iter = 5000;  // total Arnoldi steps
  double tol = 1e-10;   // relative residual
};

struct GmresResult {
  Vector x;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

// Restarted GMRES with right diagonal (Jacobi) preconditioning.
inline GmresResult gmres(const std::function<Vector(const Vector&)>& a, const Vector& diag,
                         const Vector& b, const GmresOptions& opt = {}) {
  const Eigen::Index n = b.size();
  GmresResult r;
  r.x = Vector::Zero(n);
  double bn = b.norm();
  if (bn == 0.0) {
    r.converged = true;
    return r;
  }
  Vector inv = diag.cwiseInverse();
  const int m = opt.restart;
  while (r.iterations < opt.max_iter) {
    Vector res = b - a(r.x);
    double beta = res.norm();
    r.residual = beta / bn;
    if (r.residual <= opt.tol) {
      r.converged = true;
      return r;
    }
    std::vector<Vector> v;
    v.push_back(res / beta);
    Matrix hess = Matrix::Zero(m + 1, m);
    std::vector<cplx> cs(m), sn(m);
    Vector g = Vector::Zero(m + 1);
    g[0] = beta;
    int k = 0;
    for (; k < m && r.iterations < opt.max_iter; ++k, ++r.iterations) {
      Vector w = a(inv.cwiseProduct(v[k]));
      for (int i = 0; i <= k; ++i) {
        hess(i, k) = v[i].dot(w);
        w -= hess(i, k) * v[i];
      }
      hess(k + 1, k) = w.norm();
      if (std::abs(hess(k + 1, k)) > 0.0) v.push_back(w / hess(k + 1, k).real());
      else v.push_back(Vector::Zero(n));
      for (int i = 0; i < k; ++i) {
        cplx t = std::conj(cs[i]) * hess(i, k) + std::conj(sn[i]) * hess(i + 1, k);
        hess(i + 1, k) = -sn[i] * hess(i, k) + cs[i] * hess(i + 1, k);
        hess(i, k) = t;
      }
      double h0 = std::abs(hess(k, k)), h1 = std::abs(hess(k + 1, k));
      double den = std::hypot(h0, h1);
      cs[k] = den > 0.0 ? hess(k, k) / den : 1.0;
      sn[k] = den > 0.0 ? hess(k + 1, k) / den : 0.0;
      hess(k, k) = std::conj(cs[k]) * hess(k, k) + std::conj(sn[k]) * hess(k + 1, k);
      hess(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = std::conj(cs[k]) * g[k];
      if (std::abs(g[k + 1]) / bn <= opt.tol) {
        ++k;
        ++r.iterations;
        break;
      }
    }
    Vector y = hess.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    Vector dx = Vector::Zero(n);
    for (int i = 0; i < k; ++i) dx += y[i] * v[i];
    r.x += inv.cwiseProduct(dx);
  }
  r.residual = (b - a(r.x)).norm() / bn;
  r.converged = r.residual <= opt.tol;
  return r;
}

}  // namespace mlr
