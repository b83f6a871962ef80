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

#include <cstdlib>
#include <vector>

#include "mlr/errors.hpp"
#include "mlr/types.hpp"

namespace mlr {

// Sites n in Z^d with |n|_inf <= L, enumerated row-major (last coordinate
// fastest).
class Box {
 public:
  Box(int dim, int radius) : dim_(dim), radius_(radius) {
    if (dim < 1) throw PreconditionError("box dimension must be >= 1");
    if (radius < 0) throw PreconditionError("box radius must be >= 0");
    side_ = 2 * radius + 1;
    size_ = 1;
    for (int i = 0; i < dim; ++i) size_ *= side_;
  }

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  int side() const { return side_; }
  Eigen::Index size() const { return size_; }

  std::vector<int> site(Eigen::Index index) const {
    std::vector<int> n(dim_);
    for (int i = dim_ - 1; i >= 0; --i) {
      n[i] = static_cast<int>(index % side_) - radius_;
      index /= side_;
    }
    return n;
  }

  // Returns -1 when n lies outside the box.
  Eigen::Index index(const std::vector<int>& n) const {
    Eigen::Index idx = 0;
    for (int i = 0; i < dim_; ++i) {
      if (std::abs(n[i]) > radius_) return -1;
      idx = idx * side_ + (n[i] + radius_);
    }
    return idx;
  }

  Eigen::Index center_index() const { return index(std::vector<int>(dim_, 0)); }

  // Index of n after wrapping every coordinate into the box.
  Eigen::Index periodic_index(std::vector<int> n) const {
    for (int i = 0; i < dim_; ++i) {
      int k = (n[i] + radius_) % side_;
      if (k < 0) k += side_;
      n[i] = k - radius_;
    }
    return index(n);
  }

  static int sup_norm(const std::vector<int>& n) {
    int m = 0;
    for (int v : n) m = std::max(m, std::abs(v));
    return m;
  }

  static double euclid(const std::vector<int>& n) {
    double s = 0.0;
    for (int v : n) s += double(v) * v;
    return std::sqrt(s);
  }

  // Momentum xi_k = 2 pi k / side of grid coordinate k in [0, side).
  double momentum(int k) const { return two_pi * k / side_; }

  // Momentum point of a grid index (same row-major layout as sites).
  std::vector<double> momentum_point(Eigen::Index index) const {
    std::vector<double> xi(dim_);
    for (int i = dim_ - 1; i >= 0; --i) {
      xi[i] = momentum(static_cast<int>(index % side_));
      index /= side_;
    }
    return xi;
  }

  // Phase-space position of a site, x = -n (see README, "Conventions").
  std::vector<double> position(Eigen::Index index) const {
    auto n = site(index);
    std::vector<double> x(dim_);
    for (int i = 0; i < dim_; ++i) x[i] = -double(n[i]);
    return x;
  }

  bool operator==(const Box& o) const { return dim_ == o.dim_ && radius_ == o.radius_; }

 private:
  int dim_;
  int radius_;
  int side_;
  Eigen::Index size_;
};

}  // namespace mlr
