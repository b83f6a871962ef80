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

#include <gtest/gtest.h>

#include "mlr/lattice.hpp"
#include "mlr/linear_map.hpp"

using namespace mlr;

TEST(Stencil, LaplacianSymbolValues) {
  auto st = Stencil::laplacian(1);
  EXPECT_NEAR(st.p0(0.0), 0.0, 1e-15);
  EXPECT_NEAR(st.p0(pi), 2.0, 1e-15);
  EXPECT_NEAR(st.p0(pi / 2), 1.0, 1e-15);
  auto st2 = Stencil::laplacian(2);
  std::vector<double> xi{pi / 2, pi / 2};
  EXPECT_NEAR(st2.p0(xi), 2.0, 1e-15);
}

TEST(Stencil, SymbolIsRealOnTheTorus) {
  Stencil st(1, {{-2}, {-1}, {0}, {1}, {2}}, {cplx(0.1, 0.2), cplx(-0.5, 0.1), 1.0, cplx(-0.5, -0.1), cplx(0.1, -0.2)});
  for (int k = 0; k < 200; ++k) {
    double xi = two_pi * k / 200;
    EXPECT_LE(std::fabs(st.p0_complex(std::span<const double>(&xi, 1)).imag()), 1e-14);
    EXPECT_LE(std::fabs(st.velocity_complex(std::span<const double>(&xi, 1))[0].imag()), 1e-14);
  }
}

TEST(Stencil, RejectsAsymmetricCoefficients) {
  EXPECT_THROW(Stencil(1, {{-1}, {0}, {1}}, {-0.5, 1.0, -0.4}), PreconditionError);
  EXPECT_THROW(Stencil(1, {{0}, {1}}, {1.0, -0.5}), PreconditionError);
}

TEST(Stencil, VelocityIsSine) {
  auto st = Stencil::laplacian(1);
  EXPECT_NEAR(st.velocity(pi / 2), 1.0, 1e-15);
  EXPECT_NEAR(st.velocity(0.0), 0.0, 1e-15);
  EXPECT_NEAR(st.velocity(-pi / 2), -1.0, 1e-15);
}

TEST(EnergyWindow, MinimumSpeedMatchesDenseSampling) {
  auto st = Stencil::laplacian(1);
  auto scan = check_energy_window(st, {0.9, 1.1}, 1000000);
  EXPECT_NEAR(scan.min_speed, std::sin(std::acos(-0.1)), 1e-5);
}

TEST(EnergyWindow, CriticalValueAndEmptyShellAreDistinct) {
  auto st = Stencil::laplacian(1);
  EXPECT_THROW(validate_energy_window(st, {-0.1, 0.1}), CriticalValueError);
  EXPECT_THROW(check_energy_window(st, {2.5, 3.0}), EmptyShellError);
  try {
    validate_energy_window(st, {-0.1, 0.1});
  } catch (const EmptyShellError&) {
    FAIL() << "critical value reported as empty shell";
  } catch (const CriticalValueError&) {
  }
}

TEST(Hamiltonian, ImpulseResponse) {
  Box box(1, 10);
  auto h = assemble_hamiltonian(Stencil::laplacian(1), Potential::zero(), box);
  Vector u = Vector::Zero(box.size());
  u[box.index({0})] = 1.0;
  Vector hu = h.apply(u);
  for (int n = -10; n <= 10; ++n) {
    cplx expect = n == 0 ? 1.0 : (std::abs(n) == 1 ? -0.5 : 0.0);
    EXPECT_NEAR(std::abs(hu[box.index({n})] - expect), 0.0, 1e-15) << n;
  }
}

TEST(Hamiltonian, ConstantsAreHarmonicInside) {
  Box box(1, 10);
  auto h = assemble_hamiltonian(Stencil::laplacian(1), Potential::zero(), box);
  Vector hu = h.apply(Vector::Ones(box.size()));
  for (int n = -9; n <= 9; ++n) EXPECT_NEAR(std::abs(hu[box.index({n})]), 0.0, 1e-15);
}

TEST(Hamiltonian, PotentialOnDiagonal) {
  Box box(1, 10);
  auto h = assemble_hamiltonian(Stencil::laplacian(1), Potential::power_law(1.0, 0.5), box);
  Vector u = Vector::Zero(box.size());
  u[box.index({5})] = 1.0;
  EXPECT_NEAR(h.apply(u)[box.index({5})].real(), 1.0 + std::pow(26.0, -0.25), 1e-15);
}

TEST(Hamiltonian, IsHermitianWithoutCap) {
  Box box(1, 40);
  auto h = assemble_hamiltonian(Stencil::laplacian(1), Potential::power_law(0.5, 0.5), box);
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    Vector u = random_vector(box.size(), rng), v = random_vector(box.size(), rng);
    worst = std::max(worst, std::abs(v.dot(h.apply(u)) - h.apply(v).dot(u)) / (u.norm() * v.norm()));
  }
  EXPECT_LE(worst, 1e-12);
  EXPECT_LE(adjoint_mismatch(h.map()), 1e-12);
}

TEST(Hamiltonian, RayleighQuotientsStayInTheBand) {
  Box box(2, 6);
  auto h = assemble_hamiltonian(Stencil::laplacian(2), Potential::zero(), box);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    Vector u = random_vector(box.size(), rng);
    double q = (u.dot(h.apply(u)) / u.squaredNorm()).real();
    EXPECT_GE(q, 0.0 - 1e-10);
    EXPECT_LE(q, 4.0 + 1e-10);
  }
}

TEST(Hamiltonian, PeriodicPlaneWavesAreEigenvectors) {
  Box box(1, 12);
  auto st = Stencil::laplacian(1);
  auto h = assemble_hamiltonian(st, Potential::zero(), box, std::nullopt, Boundary::periodic);
  for (int k = 0; k < box.side(); ++k) {
    double xi = box.momentum(k);
    Vector u(box.size());
    for (Eigen::Index i = 0; i < box.size(); ++i) u[i] = std::polar(1.0, -box.site(i)[0] * xi);
    EXPECT_LE((h.apply(u) - st.p0(xi) * u).norm(), 1e-12 * u.norm());
  }
}

TEST(Hamiltonian, CapIsDissipative) {
  Box box(1, 64);
  auto h = assemble_hamiltonian(Stencil::laplacian(1), Potential::zero(), box, CAPProfile::standard(64));
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    Vector u = random_vector(box.size(), rng);
    EXPECT_LE(u.dot(h.apply(u)).imag(), 1e-12);
  }
  EXPECT_EQ(h.absorber()[box.center_index()], 0.0);
  EXPECT_GE(h.absorber().minCoeff(), 0.0);
}

TEST(Hamiltonian, BoxMustExceedCapAndBandwidth) {
  Box box(1, 8);
  EXPECT_THROW(assemble_hamiltonian(Stencil::laplacian(1), Potential::zero(), box, CAPProfile{8, 1.0}),
               PreconditionError);
}

TEST(Box, IndexAndSiteAreInverse) {
  Box box(3, 2);
  EXPECT_EQ(box.size(), 125);
  for (Eigen::Index i = 0; i < box.size(); ++i) EXPECT_EQ(box.index(box.site(i)), i);
}

TEST(Potential, DecayConstantBoundsTheSamples) {
  Box box(1, 100);
  auto v = Potential::dipole(2.0, 0.7);
  double c = v.decay_constant(box);
  for (Eigen::Index i = 0; i < box.size(); ++i) {
    auto n = box.site(i);
    EXPECT_LE(std::fabs(v(n)), c * std::pow(1.0 + Box::euclid(n), -0.7) * (1 + 1e-14));
  }
  EXPECT_THROW(Potential::power_law(1.0, 1.5), PreconditionError);
}
