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

namespace mlr {

// The smooth cutoff Phi: Phi = 1 on (-inf, 1/2], Phi = 0 on [1, inf),
// strictly decreasing in between.  Built from the standard ramp
//   g(r) = B(r) / (B(r) + B(1-r)),  B(r) = exp(-1/r) for r > 0, else 0,
// as Phi(s) = g(2(1-s)).
//
// The ring profile is deliberately broken (it rises on [0, 1/4]) and only
// exists to drive negative controls.
class CutoffPhi {
 public:
  enum class Profile { standard, ring };

  explicit CutoffPhi(Profile p = Profile::standard) : profile_(p) {}

  Profile profile() const { return profile_; }

  double phi(double s) const {
    if (profile_ == Profile::ring) return raw(2.0 * std::fabs(s - 0.5));
    return raw(s);
  }

  double dphi(double s) const {
    if (profile_ == Profile::ring) {
      double sg = (s >= 0.5) ? 1.0 : -1.0;
      return 2.0 * sg * draw(2.0 * std::fabs(s - 0.5));
    }
    return draw(s);
  }

  double psi(double s) const {
    double p = phi(s);
    return p * p;
  }

  double dpsi(double s) const { return 2.0 * phi(s) * dphi(s); }

  // Smooth step: 0 for u <= 1/2, 1 for u >= 1.
  double step(double u) const { return 1.0 - raw(u); }
  double dstep(double u) const { return -draw(u); }

  // The ramp g and its derivative.  Written through q = 1/r - 1/(1-r) so
  // that neither branch overflows near the ends.
  static double ramp(double r) {
    if (r <= 0.0) return 0.0;
    if (r >= 1.0) return 1.0;
    double q = 1.0 / r - 1.0 / (1.0 - r);
    if (q > 700.0) return 0.0;
    return 1.0 / (1.0 + std::exp(q));
  }

  static double dramp(double r) {
    if (r <= 0.0 || r >= 1.0) return 0.0;
    double q = 1.0 / r - 1.0 / (1.0 - r);
    if (std::fabs(q) > 700.0) return 0.0;
    double e = std::exp(-std::fabs(q));
    double g1g = e / ((1.0 + e) * (1.0 + e));  // g (1 - g)
    return g1g * (1.0 / (r * r) + 1.0 / ((1.0 - r) * (1.0 - r)));
  }

 private:
  static double raw(double s) { return ramp(2.0 * (1.0 - s)); }
  static double draw(double s) { return -2.0 * dramp(2.0 * (1.0 - s)); }

  Profile profile_;
};

}  // namespace mlr
