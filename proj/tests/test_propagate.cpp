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

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "mlr/propagate.hpp"

using namespace mlr;

namespace {

Hamiltonian small_hamiltonian() { return Model::reference().hamiltonian(8, false); }

Matrix dense_propagator(const Hamiltonian& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.dense());
  Vector phase = (es.eigenvalues().cast<cplx>() * cplx(0, -t)).array().exp();
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TEST(Bessel, BackwardRecurrenceMatchesTheLibraryForSmallArguments) {
  for (double x : {0.1, 1.0, 7.5, 30.0}) {
    auto j = detail::bessel_j_sequence(x, 60);
    for (int k : {0, 1, 2, 10, 40})
      EXPECT_NEAR(j[k], std::cyl_bessel_j(static_cast<double>(k), x), 1e-13) << x << " " << k;
  }
  // sum of squares identity J_0^2 + 2 sum J_k^2 = 1 at a large argument
  auto j = detail::bessel_j_sequence(900.0, 1100);
  double s = j[0] * j[0];
  for (std::size_t k = 1; k < j.size(); ++k) s += 2.0 * j[k] * j[k];
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Evolve, TimeZeroIsExact) {
  auto h = small_hamiltonian();
  std::mt19937_64 rng(1);
  Vector u = random_vector(h.dim(), rng);
  EXPECT_EQ((evolve(h, u, 0.0) - u).norm(), 0.0);
  EXPECT_THROW(evolve(h, u, -1.0), PreconditionError);
}

TEST(Evolve, MatchesTheEigendecompositionPropagator) {
  auto h = Model::reference().hamiltonian(7, false);  // 15 sites
  Model per = Model::reference();
  per.boundary = Boundary::periodic;
  auto hp = per.hamiltonian(8, false);  // 17 sites
  std::mt19937_64 rng(2);
  for (const auto* hh : {&h, &hp}) {
    Vector u = random_vector(hh->dim(), rng);
    Vector ref = dense_propagator(*hh, 5.0) * u;
    EXPECT_LE((evolve(*hh, u, 5.0) - ref).norm(), 1e-9 * u.norm());
  }
}

TEST(Evolve, UnitaryGroupLawAndEnergyConservation) {
  auto h = Model::reference().hamiltonian(64, false);
  std::mt19937_64 rng(3);
  Vector u = random_vector(h.dim(), rng);
  Vector a = evolve(h, u, 13.0);
  EXPECT_NEAR(a.norm(), u.norm(), 1e-10 * u.norm());
  Vector b = evolve(h, evolve(h, u, 6.0), 7.0);
  EXPECT_LE((a - b).norm(), 1e-9 * u.norm());
  cplx e0 = u.dot(h.apply(u)), e1 = a.dot(h.apply(a));
  EXPECT_LE(std::abs(e0 - e1), 1e-9 * std::abs(e0));
}

TEST(Evolve, PropagatorMapAdjointRunsBackwards) {
  auto h = Model::reference().hamiltonian(32, false);
  auto u = propagator(h, 4.0);
  EXPECT_LE(adjoint_mismatch(u), 1e-10);
  std::mt19937_64 rng(4);
  Vector v = random_vector(h.dim(), rng);
  EXPECT_LE((u.adjoint_apply(u.apply(v)) - v).norm(), 1e-10 * v.norm());
}

TEST(Evolve, AbsorberDrainsTheNorm) {
  auto h = Model::free().hamiltonian(64, true);
  Vector u = Vector::Zero(h.dim());
  u[h.box().center_index()] = 1.0;
  Vector later = evolve(h.map(), enclosure_of(h), u, 200.0, 1e-10);
  EXPECT_LT(later.norm(), 0.5);
  // against the dense non-hermitian exponential
  Matrix m = h.dense() * cplx(0, -20.0);
  Vector ref = m.exp() * u;
  EXPECT_LE((evolve(h.map(), enclosure_of(h), u, 20.0, 1e-11) - ref).norm(), 1e-8);
}

TEST(Evolve, WrongEnclosureIsDetected) {
  auto h = Model::free().hamiltonian(32, false);
  std::mt19937_64 rng(5);
  Vector u = random_vector(h.dim(), rng);
  Enclosure tiny{1.0, 0.2, 0.0};
  EXPECT_THROW(evolve(h.map(), tiny, u, 50.0), NumericalError);
}

TEST(FunctionalCalculus, ConstantFunctionIsTheIdentity) {
  auto h = Model::reference().hamiltonian(40, false);
  std::mt19937_64 rng(6);
  Vector u = random_vector(h.dim(), rng);
  EXPECT_LE((apply_function(h, [](double) { return 1.0; }, u) - u).norm(), 1e-10 * u.norm());
}

TEST(FunctionalCalculus, PlaneWavesOnAndOffTheCutoff) {
  Model per = Model::free();
  per.boundary = Boundary::periodic;
  auto h = per.hamiltonian(50, false);
  const Box& box = h.box();
  const int k = 20;
  const double xi = box.momentum(k);
  Vector wave(h.dim());
  for (Eigen::Index i = 0; i < h.dim(); ++i) wave[i] = std::polar(1.0, xi * box.site(i)[0]);
  EnergyCutoff on(per.stencil.p0(xi), 0.1);
  EXPECT_LE((apply_f_of_H(h, on, wave) - wave).norm(), 1e-8 * wave.norm());
  EnergyCutoff off(per.stencil.p0(xi) + 0.5, 0.1);
  EXPECT_LE(apply_f_of_H(h, off, wave).norm(), 1e-8 * wave.norm());
}

TEST(FunctionalCalculus, CutoffShapeAndComplementOnTheCore) {
  EnergyCutoff f(1.0, 0.2);
  EXPECT_EQ(f(1.0), 1.0);
  EXPECT_EQ(f(1.19), 1.0);
  EXPECT_EQ(f(1.4), 0.0);
  EXPECT_EQ(f(0.55), 0.0);
  EXPECT_GT(f(1.3), 0.0);
  EXPECT_THROW(EnergyCutoff(1.0, 0.0), PreconditionError);

  auto h = Model::reference().hamiltonian(64, false);
  std::mt19937_64 rng(7);
  Vector u = random_vector(h.dim(), rng);
  Vector rest = u - apply_f_of_H(h, f, u);  // (1 - f)(H) u
  EnergyCutoff inner(1.0, 0.08);          // supported where f = 1
  EXPECT_LE(apply_f_of_H(h, inner, rest).norm(), 1e-8 * u.norm());
}

TEST(FunctionalCalculus, CommutesWithThePropagator) {
  auto h = Model::reference().hamiltonian(48, false);
  EnergyCutoff f(0.9, 0.15);
  std::mt19937_64 rng(8);
  Vector u = random_vector(h.dim(), rng);
  Vector a = apply_f_of_H(h, f, evolve(h, u, 9.0));
  Vector b = evolve(h, apply_f_of_H(h, f, u), 9.0);
  EXPECT_LE((a - b).norm(), 1e-9 * u.norm());
  EXPECT_THROW(apply_f_of_H(Model::free().hamiltonian(48, true), f, u), PreconditionError);
}

TEST(LocalDecay, WeightedNormsDecayAndControlsBehave) {
  LocalDecayOptions opt;
  opt.radius = 256;
  EnergyCutoff f(1.0, 0.2);
  auto grid = log_time_grid(5.0, 100.0, 8);
  auto r = local_decay_probe(Model::free(), f, 3.0, grid, opt);
  EXPECT_GE(r.kappa, 1.5);

  auto zero = local_decay_probe(Model::free(), f, 3.0, {0.0, 1.0}, opt);
  EXPECT_LE(zero.rows[0].norm, 1.0);

  // no weights: e^{-itH} f(H) has norm max f = 1 at every t
  auto flat = local_decay_probe(Model::free(), f, 0.0, {0.0, 10.0, 50.0}, opt);
  for (const auto& row : flat.rows) EXPECT_NEAR(row.norm, 1.0, 1e-3);

  EXPECT_THROW(local_decay_probe(Model::free(), f, 3.0, {10.0, 400.0}, opt), PreconditionError);
}

TEST(Propagation, OffShellSourceFadesWithH) {
  // a2 sits at momenta with p0 <= 0.05, far below supp f = [0.6, 1.4].
  // The cutoff's Fourier tail decays only like exp(-c sqrt(k)), so the
  // leakage at h = 1/8 is around 1e-2; it must fall off quickly in h.
  PropagationOptions opt;
  opt.delta1 = 0.98;
  opt.delta2 = 0.3;
  opt.min_radius = 512;
  opt.require_on_shell = false;
  opt.expectation = Expectation::unchecked;
  opt.time_points = 8;
  auto r = propagation_probe(Model::free(), KernelPoint::one_d(4, pi / 2, 3, 0.0), 1.0, {1.0 / 8, 1.0 / 16}, opt);
  ASSERT_EQ(r.sup.size(), 2u);
  EXPECT_LT(r.sup[0].norm, 0.1);
  EXPECT_LT(r.sup[1].norm, 0.25 * r.sup[0].norm);
  opt.require_on_shell = true;
  EXPECT_THROW(propagation_probe(Model::free(), KernelPoint::one_d(4, pi / 2, 3, 0.0), 1.0, {1.0 / 8}, opt),
               PreconditionError);
}

TEST(Propagation, TimeZeroEntryIsTheStaticSandwich) {
  PropagationOptions opt;
  opt.delta1 = 0.98;
  opt.delta2 = 0.5;
  opt.time_points = 4;
  const double hh = 1.0 / 8;
  auto r = propagation_probe(Model::free(), KernelPoint::one_d(4, pi / 2, 3, -pi / 2), 1.0, {hh, 1.0 / 16}, opt);
  ASSERT_EQ(r.rows.front().t, 0.0);
  auto h = Model::free().hamiltonian(r.rows.front().radius, false);
  auto [b1, b2] = make_bump_pair({4.0}, {pi / 2}, {-3.0}, {-pi / 2}, 0.98, 0.5);
  auto direct = operator_norm(
      compose({op_h(b1, hh, h.box()), function_map(h, EnergyCutoff(1.0, 0.2), 1e-10), op_h(b2, hh, h.box())}));
  EXPECT_NEAR(r.rows.front().norm, direct.value, 1e-3 * direct.value);
}

TEST(Propagation, FlowConnectedSupportsDoNotDecay) {
  PropagationOptions opt;
  opt.delta1 = 0.98;
  opt.delta2 = 0.5;
  opt.expectation = Expectation::control;
  opt.time_points = 16;
  // a2 at x = 1 moving right reaches a1 at x = 4 after t = 3 / h
  auto r = propagation_probe(Model::free(), KernelPoint::one_d(4, pi / 2, -1, pi / 2), 1.0,
                             {1.0 / 8, 1.0 / 16, 1.0 / 32}, opt);
  EXPECT_LE(r.fit.slope, 1.0);
  for (const auto& s : r.sup) EXPECT_GT(s.norm, 0.1);
}

TEST(Splitting, ArithmeticAndFlags) {
  auto r = t_splitting_bound(8.0, 2.0, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(r.horizon_exponent, 7.0);
  EXPECT_DOUBLE_EQ(r.head_exponent, 1.0);
  EXPECT_DOUBLE_EQ(r.tail_exponent, 1.0);
  EXPECT_DOUBLE_EQ(r.implied_exponent, 1.0);
  EXPECT_FALSE(r.inconclusive);
  EXPECT_FALSE(r.nonpositive);

  // a sup-norm slope of 4 cannot pay for T = h^{-7}
  auto weak = t_splitting_bound(4.0, 2.0, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(weak.implied_exponent, -3.0);
  EXPECT_TRUE(weak.nonpositive);

  EXPECT_TRUE(t_splitting_bound(8.0, 1.0, 3.0, 1.0).inconclusive);
  EXPECT_TRUE(t_splitting_bound(0.0, 2.0, 3.0, 1.0).nonpositive);
  EXPECT_THROW(t_splitting_bound(std::nan(""), 2.0, 3.0, 1.0), PreconditionError);
  DecayFit empty;
  empty.degenerate = true;
  EXPECT_THROW(t_splitting_bound(empty, empty, 3.0, 1.0), PreconditionError);
}
