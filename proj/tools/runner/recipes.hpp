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

#include <algorithm>
#include <string>
#include <vector>

#include "mlr/errors.hpp"

namespace mlr::runner {

struct Recipe {
  std::string name;
  std::string claim;  // what the run demonstrates
  std::string config;
};

// Canned runs, one per checked claim.
inline const std::vector<Recipe>& recipes() {
  static const std::vector<Recipe> r{
      {"free-wf-offset",
       "outgoing resolvent wave front: a kernel point with the wrong orientation is smooth (free chain)",
       R"([model]
potential = zero

[probe]
kind = wf
x = 4
xi = 1.5707963267948966
y = 3
eta = -1.5707963267948966
delta1 = 0.98
delta2 = 0.5

[criteria]
min_slope = 3
max_residual = 0.3
)"},
      {"reference-wf-offset",
       "outgoing resolvent wave front: a kernel point with the wrong orientation is smooth (long-range potential)",
       R"([probe]
kind = wf
x = 4
xi = 1.5707963267948966
y = 3
eta = -1.5707963267948966
delta1 = 0.98
delta2 = 0.5

[criteria]
min_slope = 3
max_residual = 0.3
)"},
      {"free-wf-forward-ray",
       "outgoing resolvent wave front: a point on the forward flow is singular (free chain, control)",
       R"([model]
potential = zero

[probe]
kind = wf
x = 4
xi = 1.5707963267948966
y = -1
eta = 1.5707963267948966
delta1 = 0.98
delta2 = 0.5
expectation = control

[criteria]
max_slope = 1
)"},
      {"free-kernel-column",
       "limiting absorption on the free chain matches the closed-form Green function",
       R"([model]
potential = zero

[probe]
kind = free-kernel
radius = 512

[criteria]
max_error = 0.001
)"},
      {"ik-cones-free",
       "weighted incoming-to-outgoing resolvent stays bounded as the box grows (free chain)",
       R"([model]
potential = zero
cap_fraction = 0.25

[probe]
kind = ik

[criteria]
max_ratio = 1.2
)"},
      {"ik-cones-reference",
       "weighted incoming-to-outgoing resolvent stays bounded as the box grows (long-range potential)",
       R"([model]
cap_fraction = 0.25

[probe]
kind = ik

[criteria]
max_ratio = 1.2
)"},
      {"propagation-offset",
       "energy-localized propagation between bumps off each other's flow lines decays in h",
       R"([probe]
kind = prop31
x = 4
xi = 1.5707963267948966
y = 3
eta = -1.5707963267948966
delta1 = 0.98
delta2 = 0.5

[criteria]
min_slope = 3
)"},
      {"local-decay-nu3",
       "weighted energy-localized propagator decays polynomially in time",
       R"([probe]
kind = local-decay
nu = 3

[criteria]
min_kappa = 1.5
)"},
      {"escape-ladder",
       "escape functions: transport inequalities, energy inequality and monotonicity on dense boxes",
       R"([probe]
kind = escape

[criteria]
transport = true
control_fails = true
min_energy_exponent = 1.5
monotonicity = true
)"},
      {"one-sided-free",
       "one-sided weighted resolvent on the outgoing cone stays bounded (free chain)",
       R"([model]
potential = zero
cap_fraction = 0.25

[probe]
kind = one-sided

[criteria]
max_ratio = 1.2
)"},
      {"one-sided-reference",
       "one-sided weighted resolvent on the outgoing cone stays bounded (long-range potential)",
       R"([model]
cap_fraction = 0.25

[probe]
kind = one-sided

[criteria]
max_ratio = 1.2
)"},
  };
  return r;
}

inline const Recipe& find_recipe(const std::string& name) {
  auto it = std::find_if(recipes().begin(), recipes().end(), [&](const Recipe& r) { return r.name == name; });
  if (it == recipes().end()) throw ConfigError("no recipe named '" + name + "'");
  return *it;
}

}  // namespace mlr::runner
