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

#include <optional>

#include "mlr/lattice.hpp"

namespace mlr {

// Everything about the physical model except the box size.
struct Model {
  Stencil stencil = Stencil::laplacian(1);
  Potential potential = Potential::zero();
  double cap_fraction = 0.125;  // CAP width as a fraction of L
  double cap_strength = 1.0;
  Boundary boundary = Boundary::dirichlet;

  static Model free(int dim = 1) { return Model{Stencil::laplacian(dim), Potential::zero()}; }

  // The long-range reference model V(n) = 0.5 (1 + |n|^2)^{-1/4}.
  static Model reference(int dim = 1) {
    return Model{Stencil::laplacian(dim), Potential::power_law(0.5, 0.5)};
  }

  int dim() const { return stencil.dim(); }

  CAPProfile cap(int radius) const {
    return CAPProfile{std::max(1, static_cast<int>(radius * cap_fraction)), cap_strength};
  }

  Hamiltonian hamiltonian(int radius, bool with_cap) const {
    Box box(dim(), radius);
    return Hamiltonian(stencil, potential, box,
                       with_cap ? std::optional<CAPProfile>(cap(radius)) : std::nullopt, boundary);
  }
};

}  // namespace mlr
