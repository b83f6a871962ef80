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
#include <limits>
#include <string>
#include <vector>

#include "mlr/errors.hpp"

namespace mlr {

// Least-squares line through (log10 x, log10 y).  For norms that behave
// like C h^N the slope estimates N; for C <t>^{-k} it estimates -k.
struct DecayFit {
  std::vector<double> abscissae;  // log10 of the sampled h (or <t>)
  std::vector<double> ordinates;  // log10 of the norms
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double max_residual = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;  // some ordinate was zero (or negative)

  static DecayFit loglog(const std::vector<double>& x, const std::vector<double>& y,
                         std::size_t min_points = 4) {
    if (x.size() != y.size()) throw PreconditionError("fit needs as many ordinates as abscissae");
    if (x.size() < min_points)
      throw PreconditionError("fit needs at least " + std::to_string(min_points) + " points");
    DecayFit f;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] > 0.0)) throw PreconditionError("fit abscissae must be positive");
      if (!(y[i] > 0.0)) {
        f.degenerate = true;
        continue;
      }
      f.abscissae.push_back(std::log10(x[i]));
      f.ordinates.push_back(std::log10(y[i]));
    }
    if (f.degenerate) return f;
    const double n = static_cast<double>(f.abscissae.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < f.abscissae.size(); ++i) {
      sx += f.abscissae[i];
      sy += f.ordinates[i];
      sxx += f.abscissae[i] * f.abscissae[i];
      sxy += f.abscissae[i] * f.ordinates[i];
    }
    double den = n * sxx - sx * sx;
    if (den == 0.0) throw PreconditionError("fit abscissae are all equal");
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    f.max_residual = 0.0;
    for (std::size_t i = 0; i < f.abscissae.size(); ++i)
      f.max_residual = std::max(f.max_residual,
                                std::fabs(f.ordinates[i] - f.intercept - f.slope * f.abscissae[i]));
    return f;
  }
};

}  // namespace mlr
