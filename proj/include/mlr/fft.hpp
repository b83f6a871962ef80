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

#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include <fftw3.h>

#include "mlr/box.hpp"

namespace mlr {

namespace detail {

class FFTPlan {
 public:
  FFTPlan(int dim, int side, int sign) {
    std::vector<int> n(dim, side);
    Eigen::Index size = 1;
    for (int i = 0; i < dim; ++i) size *= side;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size));
    plan_ = fftw_plan_dft(dim, n.data(), buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (!plan_) throw NumericalError("FFTW could not create a plan");
  }
  ~FFTPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  FFTPlan(const FFTPlan&) = delete;
  FFTPlan& operator=(const FFTPlan&) = delete;

  // fftw_execute_dft is thread safe; the planner is not.
  void execute(Vector& data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_, p, p);
  }

  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

 private:
  fftw_plan plan_ = nullptr;
};

inline std::shared_ptr<const FFTPlan> cached_plan(int dim, int side, int sign) {
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const FFTPlan>> cache;
  std::lock_guard<std::mutex> lock(FFTPlan::planner_mutex());
  auto key = std::make_tuple(dim, side, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const FFTPlan>(dim, side, sign);
  cache.emplace(key, plan);
  return plan;
}

}  // namespace detail

// Discrete Fourier pair on the periodic box:
//   analysis   u^(xi_k) = sum_n u(n) e^{+i n.xi_k}
//   synthesis  u(n)     = side^{-d} sum_k u^(xi_k) e^{-i n.xi_k}
// so the plane wave of momentum xi is e^{-i n.xi}, and the multiplier
// e^{i xi} acts as the shift u(n) -> u(n-1).
//
// Sites are stored with offset +L (index j holds n = j - L).  The offset
// phase cancels in every analyze/multiply/synthesize round trip, so
// multipliers and convolutions need no correction.
class BoxFFT {
 public:
  explicit BoxFFT(const Box& box)
      : box_(box),
        analysis_(detail::cached_plan(box.dim(), box.side(), FFTW_BACKWARD)),
        synthesis_(detail::cached_plan(box.dim(), box.side(), FFTW_FORWARD)) {}

  // In place: sum_j u_j e^{+i j.xi_k} (j is the storage offset).
  void analyze(Vector& u) const { analysis_->execute(u); }

  // In place: side^{-d} sum_k u_k e^{-i j.xi_k}.
  void synthesize(Vector& u) const {
    synthesis_->execute(u);
    u /= static_cast<double>(box_.size());
  }

  const Box& box() const { return box_; }

 private:
  Box box_;
  std::shared_ptr<const detail::FFTPlan> analysis_;
  std::shared_ptr<const detail::FFTPlan> synthesis_;
};

}  // namespace mlr
