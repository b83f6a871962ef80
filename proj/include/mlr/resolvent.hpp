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

#include <chrono>
#include <memory>
#include <variant>

#include "mlr/banded.hpp"
#include "mlr/krylov.hpp"
#include "mlr/lattice.hpp"
#include "mlr/quantize.hpp"

namespace mlr {

// plus: (H - lambda - i0)^{-1}, minus: (H - lambda + i0)^{-1}.
enum class Branch { plus, minus };

inline int branch_sign(Branch b) { return b == Branch::plus ? 1 : -1; }

enum class SolverKind { automatic, banded, dense, iterative };

inline std::vector<double> default_epsilons(int k_first = 3, int k_last = 30) {
  std::vector<double> e;
  for (int k = k_first; k <= k_last; ++k) e.push_back(std::ldexp(1.0, -k));
  return e;
}

struct LAPConfig {
  double lambda = 1.0;
  std::vector<double> epsilons = default_epsilons();
  Branch branch = Branch::plus;
  SolverKind solver = SolverKind::automatic;
  double convergence_tol = 1e-3;
  GmresOptions krylov{};

  void validate() const {
    if (epsilons.empty()) throw PreconditionError("epsilon sequence is empty");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
      if (!(epsilons[i] > 0.0)) throw PreconditionError("epsilons must be positive");
      if (i && !(epsilons[i] < epsilons[i - 1]))
        throw PreconditionError("epsilon sequence must be strictly decreasing");
    }
    if (!(convergence_tol > 0.0)) throw PreconditionError("convergence_tol must be positive");
  }
};

// Solves (H_b - z) u = f for one complex shift, where for the plus branch
// H_b = H0 + V - iW and z = lambda + i eps, and for the minus branch
// everything is conjugated: H_b = H0 + V + iW, z = lambda - i eps.  The
// minus operator is the adjoint of the plus operator.
class ShiftedSolver {
 public:
  ShiftedSolver(const Hamiltonian& h, double lambda, double eps, Branch branch,
                SolverKind kind = SolverKind::automatic, GmresOptions krylov = {})
      : h_(std::make_shared<const Hamiltonian>(h)), krylov_(krylov) {
    const double s = branch_sign(branch);
    cap_sign_ = -s;
    z_ = cplx(lambda, s * eps);
    if (kind == SolverKind::automatic)
      kind = h.box().dim() == 1 ? SolverKind::banded
             : h.dim() <= 2048 ? SolverKind::dense
                               : SolverKind::iterative;
    kind_ = kind;
    if (kind == SolverKind::banded) {
      if (h.box().dim() != 1) throw PreconditionError("banded solver needs a one-dimensional box");
      if (h.boundary() == Boundary::periodic)
        throw PreconditionError("banded solver needs Dirichlet boundaries");
      int bw = h.stencil().bandwidth();
      banded_ = std::make_shared<const BandedLU>(h.dim(), bw, bw, [&](Eigen::Index i, Eigen::Index j) {
        cplx v = h.entry(i, j, cap_sign_);
        return i == j ? v - z_ : v;
      });
    } else if (kind == SolverKind::dense) {
      Matrix m = h.dense(cap_sign_);
      m.diagonal().array() -= z_;
      dense_ = std::make_shared<const Eigen::PartialPivLU<Matrix>>(m);
      dense_adjoint_ = std::make_shared<const Eigen::PartialPivLU<Matrix>>(m.adjoint());
    }
  }

  cplx shift() const { return z_; }
  SolverKind kind() const { return kind_; }

  Vector solve(const Vector& f) const {
    if (f.isZero(0.0)) return Vector::Zero(f.size());
    switch (kind_) {
      case SolverKind::banded: return banded_->solve(f);
      case SolverKind::dense: return dense_->solve(f);
      default: return iterate(f, false);
    }
  }

  // Solves (H_b - z)^* u = f.
  Vector solve_adjoint(const Vector& f) const {
    if (f.isZero(0.0)) return Vector::Zero(f.size());
    switch (kind_) {
      case SolverKind::banded: return banded_->solve_adjoint(f);
      case SolverKind::dense: return dense_adjoint_->solve(f);
      default: return iterate(f, true);
    }
  }

  LinearMap map() const {
    auto self = std::make_shared<const ShiftedSolver>(*this);
    return LinearMap{h_->dim(), [self](const Vector& u) { return self->solve(u); },
                     [self](const Vector& u) { return self->solve_adjoint(u); }, -1, false};
  }

 private:
  Vector iterate(const Vector& f, bool adjoint) const {
    const double cs = adjoint ? -cap_sign_ : cap_sign_;
    const cplx z = adjoint ? std::conj(z_) : z_;
    auto h = h_;
    auto a = [h, cs, z](const Vector& u) { return (h->apply_signed(u, cs) - z * u).eval(); };
    Vector diag(h->dim());
    for (Eigen::Index i = 0; i < h->dim(); ++i) diag[i] = h->entry(i, i, cs) - z;
    auto r = gmres(a, diag, f, krylov_);
    if (!r.converged)
      throw NumericalError("iterative resolvent solve stalled at relative residual " +
                           std::to_string(r.residual));
    return r.x;
  }

  std::shared_ptr<const Hamiltonian> h_;
  GmresOptions krylov_;
  double cap_sign_ = -1.0;
  cplx z_;
  SolverKind kind_ = SolverKind::banded;
  std::shared_ptr<const BandedLU> banded_;
  std::shared_ptr<const Eigen::PartialPivLU<Matrix>> dense_;
  std::shared_ptr<const Eigen::PartialPivLU<Matrix>> dense_adjoint_;
};

struct LapResult {
  Vector u;
  double epsilon = 0.0;           // epsilon of the returned solution
  std::size_t steps = 0;          // solves performed
  std::vector<double> differences;  // inner-region relative changes
};

inline Vector inner_restriction(const Hamiltonian& h, const Vector& u) {
  Vector r = u;
  for (Eigen::Index i = 0; i < h.dim(); ++i)
    if (!h.is_inner(i)) r[i] = 0.0;
  return r;
}

// Solves (H - lambda -+ i eps) u = rhs along the epsilon sequence until the
// inner-region solution stops changing.
inline LapResult lap_solve(const Hamiltonian& h, const LAPConfig& cfg, const Vector& rhs) {
  cfg.validate();
  if (!h.has_cap()) throw PreconditionError("lap_solve needs a Hamiltonian with an absorbing layer");
  if (rhs.size() != h.dim()) throw PreconditionError("right-hand side has the wrong size");
  double total = rhs.norm();
  if (total == 0.0) return LapResult{Vector::Zero(h.dim()), cfg.epsilons.front(), 0, {}};
  double outside = (rhs - inner_restriction(h, rhs)).norm();
  if (outside > 1e-12 * total)
    throw PreconditionError("right-hand side must be supported in the CAP-free inner region");

  LapResult r;
  Vector prev_inner;
  Vector prev;
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
    ShiftedSolver s(h, cfg.lambda, cfg.epsilons[k], cfg.branch, cfg.solver, cfg.krylov);
    Vector u = s.solve(rhs);
    ++r.steps;
    Vector inner = inner_restriction(h, u);
    if (k > 0) {
      double base = prev_inner.norm();
      double diff = base > 0.0 ? (inner - prev_inner).norm() / base : 0.0;
      r.differences.push_back(diff);
      if (diff < cfg.convergence_tol) {
        r.u = std::move(u);
        r.epsilon = cfg.epsilons[k];
        return r;
      }
    }
    prev_inner = std::move(inner);
    prev = std::move(u);
  }
  throw NumericalError("limiting absorption did not converge down to epsilon = " +
                       std::to_string(cfg.epsilons.back()) +
                       "; enlarge the box or the absorbing layer");
}

// Runs lap_solve on a unit impulse at the box centre and returns the
// epsilon at which it settled.
inline double converged_epsilon(const Hamiltonian& h, const LAPConfig& cfg) {
  Vector delta = Vector::Zero(h.dim());
  delta[h.box().center_index()] = 1.0;
  return lap_solve(h, cfg, delta).epsilon;
}

struct SandwichResult {
  double norm = 0.0;
  double epsilon = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

// || A_left R(lambda +- i eps*) A_right || with eps* taken from a lap_solve
// convergence run.
inline SandwichResult sandwich_norm(const LinearMap& left, const Hamiltonian& h, const LAPConfig& cfg,
                                    const LinearMap& right, const NormOptions& nopt = {},
                                    std::optional<double> epsilon = std::nullopt) {
  auto t0 = std::chrono::steady_clock::now();
  SandwichResult r;
  r.epsilon = epsilon ? *epsilon : converged_epsilon(h, cfg);
  ShiftedSolver solver(h, cfg.lambda, r.epsilon, cfg.branch, cfg.solver, cfg.krylov);
  LinearMap res = solver.map();
  auto est = operator_norm(compose({left, res, right}), nopt);
  r.norm = est.value;
  r.iterations = est.iterations;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Free one-dimensional kernel for p0 = 1 - cos xi:
//   (H0 - lambda -+ i0)^{-1} delta_0 (n) = e^{+-i theta |n|} / (-+ i sin theta),
// theta = arccos(1 - lambda).  Derived from the residue at the root of
// 1 - cos xi = lambda that moves inside the unit circle for the chosen
// sign of the imaginary shift.
inline cplx free_kernel_1d(double lambda, Branch branch, long n) {
  if (!(lambda > 0.0 && lambda < 2.0))
    throw PreconditionError("free kernel needs lambda strictly inside the band (0, 2)");
  const double theta = std::acos(1.0 - lambda);
  const double s = branch_sign(branch);
  return std::polar(1.0, s * theta * std::labs(n)) / cplx(0.0, -s * std::sin(theta));
}

}  // namespace mlr
