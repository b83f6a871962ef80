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

#include "mlr/model.hpp"
#include "mlr/probes.hpp"
#include "mlr/resolvent.hpp"

using namespace mlr;

namespace {

Vector impulse(const Hamiltonian& h) {
  Vector d = Vector::Zero(h.dim());
  d[h.box().center_index()] = 1.0;
  return d;
}

}  // namespace

TEST(FreeKernel, ResidueValues) {
  EXPECT_NEAR(std::abs(free_kernel_1d(1.0, Branch::plus, 0) - cplx(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(free_kernel_1d(1.0, Branch::plus, 2) - cplx(0, -1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(free_kernel_1d(1.0, Branch::minus, 3) - std::conj(free_kernel_1d(1.0, Branch::plus, 3))),
              0.0, 1e-15);
  EXPECT_THROW(free_kernel_1d(0.0, Branch::plus, 0), PreconditionError);
  EXPECT_THROW(free_kernel_1d(2.0, Branch::plus, 0), PreconditionError);
}

TEST(FreeKernel, SolvesTheLatticeEquationAwayFromTheOrigin) {
  for (double lambda : {0.3, 1.0, 1.7}) {
    for (long n = -20; n <= 20; ++n) {
      // (H0 - lambda) G (n) = G(n) - (G(n-1) + G(n+1)) / 2 - lambda G(n)
      cplx r = (1.0 - lambda) * free_kernel_1d(lambda, Branch::plus, n) -
               0.5 * (free_kernel_1d(lambda, Branch::plus, n - 1) + free_kernel_1d(lambda, Branch::plus, n + 1));
      EXPECT_LE(std::abs(r - (n == 0 ? 1.0 : 0.0)), 1e-10) << lambda << " " << n;
    }
  }
}

TEST(LapSolve, FreeColumnMatchesTheResidueKernel) {
  auto h = Model::free().hamiltonian(512, true);
  LAPConfig cfg;
  auto r = lap_solve(h, cfg, impulse(h));
  const int half = h.inner_radius() / 2;
  Vector expect(h.dim()), got(h.dim());
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < h.dim(); ++i) {
    long n = h.box().site(i)[0];
    if (std::labs(n) > half) continue;
    cplx g = free_kernel_1d(1.0, Branch::plus, n);
    num += std::norm(r.u[i] - g);
    den += std::norm(g);
  }
  EXPECT_LE(std::sqrt(num / den), 1e-3);
  EXPECT_GT(r.epsilon, 0.0);
}

TEST(LapSolve, FreeColumnMatchesADenseSolve) {
  auto h = Model::free().hamiltonian(256, true);
  ShiftedSolver banded(h, 1.0, 1e-3, Branch::plus, SolverKind::banded);
  ShiftedSolver dense(h, 1.0, 1e-3, Branch::plus, SolverKind::dense);
  Vector d = impulse(h);
  EXPECT_LE((banded.solve(d) - dense.solve(d)).norm() / dense.solve(d).norm(), 1e-10);
}

TEST(LapSolve, OffSpectrumColumnDecaysAndMatchesDense) {
  auto h = Model::free().hamiltonian(128, true);
  LAPConfig cfg;
  cfg.lambda = 3.0;
  auto r = lap_solve(h, cfg, impulse(h));
  Matrix m = h.dense(-1.0);
  m.diagonal().array() -= cplx(3.0, r.epsilon);
  Vector ref = m.partialPivLu().solve(impulse(h));
  EXPECT_LE((r.u - ref).norm() / ref.norm(), 1e-8);
  const auto c = h.box().center_index();
  EXPECT_LE(std::abs(r.u[c + 30]), 1e-12 * std::abs(r.u[c]));
}

TEST(LapSolve, ZeroRightHandSide) {
  auto h = Model::free().hamiltonian(64, true);
  auto r = lap_solve(h, LAPConfig{}, Vector::Zero(h.dim()));
  EXPECT_EQ(r.u.norm(), 0.0);
}

TEST(LapSolve, RejectsBadInput) {
  auto h = Model::free().hamiltonian(64, true);
  Vector edge = Vector::Zero(h.dim());
  edge[0] = 1.0;
  EXPECT_THROW(lap_solve(h, LAPConfig{}, edge), PreconditionError);
  EXPECT_THROW(lap_solve(Model::free().hamiltonian(64, false), LAPConfig{}, impulse(h)), PreconditionError);
  LAPConfig bad;
  bad.epsilons = {0.1, 0.2};
  EXPECT_THROW(lap_solve(h, bad, impulse(h)), PreconditionError);
  LAPConfig coarse;
  coarse.epsilons = {0.5, 0.25};
  EXPECT_THROW(lap_solve(h, coarse, impulse(h)), NumericalError);
}

TEST(LapSolve, BranchesAreTimeReversed) {
  auto h = Model::reference().hamiltonian(256, true);
  ShiftedSolver sp(h, 1.0, 1.0 / 64, Branch::plus), sm(h, 1.0, 1.0 / 64, Branch::minus);
  Vector d = impulse(h);
  EXPECT_LE((sm.solve(d) - sp.solve(d).conjugate()).norm(), 1e-8 * sp.solve(d).norm());
}

TEST(LapSolve, DifferencesShrinkAlongTheSequence) {
  auto h = Model::free().hamiltonian(512, true);
  LAPConfig cfg;
  cfg.convergence_tol = 1e-6;
  auto r = lap_solve(h, cfg, impulse(h));
  ASSERT_GE(r.differences.size(), 4u);
  // once epsilon is below the absorber scale the changes decrease
  for (std::size_t k = 3; k < r.differences.size(); ++k)
    EXPECT_LT(r.differences[k], r.differences[k - 1]) << k;
}

TEST(ShiftedSolver, ResolventIdentity) {
  std::mt19937_64 rng(5);
  for (auto kind : {SolverKind::banded, SolverKind::dense, SolverKind::iterative}) {
    auto h = Model::reference().hamiltonian(96, true);
    ShiftedSolver r1(h, 1.0, 0.1, Branch::plus, kind), r2(h, 1.0, 0.02, Branch::plus, kind);
    for (int k = 0; k < 3; ++k) {
      Vector u = random_vector(h.dim(), rng);
      Vector lhs = r1.solve(u) - r2.solve(u);
      Vector rhs = (r1.shift() - r2.shift()) * r1.solve(r2.solve(u));
      EXPECT_LE((lhs - rhs).norm(), 1e-8 * lhs.norm());
    }
  }
}

TEST(ShiftedSolver, AdjointSolveIsTheAdjoint) {
  for (auto kind : {SolverKind::banded, SolverKind::dense, SolverKind::iterative}) {
    auto h = Model::reference().hamiltonian(64, true);
    ShiftedSolver s(h, 0.8, 0.05, Branch::minus, kind);
    EXPECT_LE(adjoint_mismatch(s.map()), 1e-9);
  }
}

TEST(ShiftedSolver, TwoDimensionalIterativeMatchesDense) {
  Model m = Model::reference(2);
  auto h = m.hamiltonian(12, true);
  ShiftedSolver it(h, 1.3, 0.05, Branch::plus, SolverKind::iterative);
  ShiftedSolver de(h, 1.3, 0.05, Branch::plus, SolverKind::dense);
  Vector d = impulse(h);
  EXPECT_LE((it.solve(d) - de.solve(d)).norm() / de.solve(d).norm(), 1e-8);
}

TEST(Sandwich, IdentityOffSpectrumIsOneOverTheDistance) {
  auto h = Model::free().hamiltonian(128, true);
  LAPConfig cfg;
  cfg.lambda = 3.0;
  auto id = identity_map(h.dim());
  auto r = sandwich_norm(id, h, cfg, id);
  EXPECT_NEAR(r.norm, 1.0, 0.02);
}

TEST(Sandwich, ZeroLeftFactor) {
  auto h = Model::free().hamiltonian(64, true);
  auto r = sandwich_norm(zero_map(h.dim()), h, LAPConfig{}, identity_map(h.dim()));
  EXPECT_EQ(r.norm, 0.0);
}

TEST(Sandwich, BumpPairShrinksWithHAndMatchesDense) {
  // kernel point off all singular sets: a1 at (4, pi/2), a2 at (-3, -pi/2)
  const Model model = Model::free();
  auto h = model.hamiltonian(256, true);
  LAPConfig cfg;
  auto [b1, b2] = make_bump_pair({4.0}, {pi / 2}, {-3.0}, {-pi / 2}, 0.98, 0.5);
  double eps = converged_epsilon(h, cfg);
  std::vector<double> norms;
  for (double hh : {1.0 / 8, 1.0 / 16}) {
    auto a1 = op_h(b1, hh, h.box()), a2 = op_h(b2, hh, h.box());
    norms.push_back(sandwich_norm(a1, h, cfg, a2, {}, eps).norm);
  }
  EXPECT_LT(norms[1], norms[0]);

  auto a1 = to_dense(op_h(b1, 1.0 / 16, h.box()));
  auto a2 = to_dense(op_h(b2, 1.0 / 16, h.box()));
  Matrix r = h.dense(-1.0);
  r.diagonal().array() -= cplx(1.0, eps);
  Matrix prod = a1 * r.partialPivLu().solve(a2);
  double svd = Eigen::JacobiSVD<Matrix>(prod).singularValues()[0];
  EXPECT_NEAR(norms[1], svd, 2e-3 * svd);
}

TEST(WfProbe, DegenerateSymbolsGiveZeroNormsAndAFlaggedFit) {
  WfProbeOptions opt;
  opt.symbols = std::make_pair(Symbol::constant(1, 0.0), Symbol::constant(1, 1.0));
  auto r = wf_probe(Model::free(), KernelPoint::one_d(4, pi / 2, 3, -pi / 2), 1.0,
                    {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}, opt);
  for (const auto& row : r.rows) EXPECT_EQ(row.norm, 0.0);
  EXPECT_TRUE(r.fit.degenerate);
}

TEST(WfProbe, BoxRuleAndClassificationAreEnforced) {
  WfProbeOptions opt;
  opt.radius = 64;
  EXPECT_THROW(wf_probe(Model::free(), KernelPoint::one_d(4, pi / 2, 3, -pi / 2), 1.0, {1.0 / 8, 1.0 / 64}, opt),
               PreconditionError);
  // a point on the forward ray is refused for a decay run
  EXPECT_THROW(wf_probe(Model::free(), KernelPoint::one_d(4, pi / 2, -1, pi / 2), 1.0, {1.0 / 8}), PreconditionError);
  WfProbeOptions control;
  control.expectation = Expectation::control;
  EXPECT_THROW(wf_probe(Model::free(), KernelPoint::one_d(4, pi / 2, 3, -pi / 2), 1.0, {1.0 / 8}, control),
               PreconditionError);
}

TEST(WfProbe, FreeModelDichotomy) {
  const std::vector<double> hs{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  WfProbeOptions off;
  off.delta1 = 0.98;
  off.delta2 = 0.5;
  auto decay = wf_probe(Model::free(), KernelPoint::one_d(4, pi / 2, 3, -pi / 2), 1.0, hs, off);
  WfProbeOptions on = off;
  on.expectation = Expectation::control;
  auto flat = wf_probe(Model::free(), KernelPoint::one_d(4, pi / 2, -1, pi / 2), 1.0, hs, on);
  EXPECT_TRUE(flat.classification.in_sigma_plus);
  EXPECT_GE(decay.fit.slope, 3.0);
  EXPECT_LE(flat.fit.slope, 1.0);
  EXPECT_GE(decay.fit.slope - flat.fit.slope, 2.0);
}

TEST(IkProbe, ParameterChecks) {
  EXPECT_THROW(ik_probe(Model::free(), 1.0, 0.3, -0.3, 0, {128}), PreconditionError);
  EXPECT_THROW(one_sided_probe(Model::free(), 1.0, -0.4, 3.0, 2.5, {128}), PreconditionError);
  EXPECT_THROW(one_sided_probe(Model::free(), 1.0, -0.4, 1.0, 0.5, {128}), PreconditionError);
}

TEST(IkProbe, UnweightedFreeNormsAreBounded) {
  auto r = ik_probe(Model::free(), 1.0, -0.3, 0.3, 0.0, {128, 256, 512});
  EXPECT_TRUE(r.bounded) << r.ratio;
  for (const auto& row : r.rows) EXPECT_TRUE(std::isfinite(row.control));
}

TEST(OneSidedProbe, ZeroSymbolGivesZero) {
  auto r = one_sided_probe(Model::free(), 1.0, -0.4, 3.0, 1.0, {64}, {}, Symbol::constant(1, 0.0));
  EXPECT_EQ(r.rows[0].norm, 0.0);
}
