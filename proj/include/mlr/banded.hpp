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

#include <vector>

#include "mlr/errors.hpp"
#include "mlr/types.hpp"

namespace mlr {

// LU factorization with partial pivoting of a complex band matrix with kl
// sub- and ku super-diagonals.  Row i is stored over the columns
// [i - kl, i + ku + kl], which leaves room for the fill-in that row
// interchanges create.  As in LAPACK's gbtf2 the multipliers are not
// permuted after they are written, so L is the product P_0 L_0 P_1 L_1 ...
class BandedLU {
 public:
  // entry(i, j) is called for |i - j| within the band only.
  template <class Entry>
  BandedLU(Eigen::Index n, int kl, int ku, Entry&& entry)
      : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), data_(n * width_, cplx(0.0)), piv_(n) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = std::max<Eigen::Index>(0, i - kl); j <= std::min(n - 1, i + ku); ++j)
        at(i, j) = entry(i, j);
    factor();
  }

  Eigen::Index size() const { return n_; }

  Vector solve(const Vector& b) const {
    Vector x = b;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (piv_[j] != j) std::swap(x[j], x[piv_[j]]);
      for (Eigen::Index i = j + 1; i <= std::min(n_ - 1, j + kl_); ++i) x[i] -= at(i, j) * x[j];
    }
    for (Eigen::Index j = n_ - 1; j >= 0; --j) {
      cplx s = x[j];
      for (Eigen::Index k = j + 1; k <= std::min(n_ - 1, j + kl_ + ku_); ++k) s -= at(j, k) * x[k];
      x[j] = s / at(j, j);
    }
    return x;
  }

  // Solves A^* x = b.
  Vector solve_adjoint(const Vector& b) const {
    Vector x = b;
    for (Eigen::Index j = 0; j < n_; ++j) {
      cplx s = x[j];
      for (Eigen::Index k = std::max<Eigen::Index>(0, j - kl_ - ku_); k < j; ++k)
        s -= std::conj(at(k, j)) * x[k];
      x[j] = s / std::conj(at(j, j));
    }
    for (Eigen::Index j = n_ - 1; j >= 0; --j) {
      cplx s = 0.0;
      for (Eigen::Index i = j + 1; i <= std::min(n_ - 1, j + kl_); ++i) s += std::conj(at(i, j)) * x[i];
      x[j] -= s;
      if (piv_[j] != j) std::swap(x[j], x[piv_[j]]);
    }
    return x;
  }

 private:
  cplx& at(Eigen::Index i, Eigen::Index j) { return data_[i * width_ + (j - i + kl_)]; }
  const cplx& at(Eigen::Index i, Eigen::Index j) const { return data_[i * width_ + (j - i + kl_)]; }

  void factor() {
    const int upper = kl_ + ku_;
    for (Eigen::Index j = 0; j < n_; ++j) {
      Eigen::Index last = std::min(n_ - 1, j + kl_);
      Eigen::Index p = j;
      double best = std::abs(at(j, j));
      for (Eigen::Index i = j + 1; i <= last; ++i) {
        double v = std::abs(at(i, j));
        if (v > best) {
          best = v;
          p = i;
        }
      }
      piv_[j] = p;
      if (best == 0.0) throw NumericalError("banded LU: matrix is singular");
      Eigen::Index cend = std::min(n_ - 1, j + upper);
      if (p != j)
        for (Eigen::Index c = j; c <= cend; ++c) std::swap(at(j, c), at(p, c));
      cplx inv = 1.0 / at(j, j);
      for (Eigen::Index i = j + 1; i <= last; ++i) {
        cplx l = at(i, j) * inv;
        at(i, j) = l;
        if (l == 0.0) continue;
        for (Eigen::Index c = j + 1; c <= cend; ++c) at(i, c) -= l * at(j, c);
      }
    }
  }

  Eigen::Index n_;
  int kl_, ku_, width_;
  std::vector<cplx> data_;
  std::vector<Eigen::Index> piv_;
};

}  // namespace mlr
