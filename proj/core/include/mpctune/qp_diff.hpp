// Copyright 2026 The mpctune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/**
 * @file
 * @brief Conservative Jacobian of the QP solution map p -> x(p).
 *
 * The dual optimizer is a fixed point of z = P_C(z - gamma (H z + h)).
 * Differentiating that map at z gives Z = U^-1 V with
 *
 *   U = J (I - gamma H) - I,    V = -gamma J (dH z + dh),
 *
 * where J = diag(sign(lambda), 1) selects the free coordinates. With this
 * sign convention Z is the negated dual sensitivity, and
 *
 *   Jx = W + Q^-1 A' Z,    W = d/dp [-Q^-1 (A'z + q)] at fixed z.
 */

#include "mpctune/qp.hpp"

#include <vector>

namespace mpctune {

/// Derivatives of every QP block with respect to each parameter coordinate.
/// Matrix-valued blocks are stored one sparse slot per coordinate; an empty
/// slot vector means the block does not depend on p at all.
struct AssemblySensitivity {
  Eigen::Index n_p = 0;
  std::vector<SpMat> dQ;
  std::vector<SpMat> dF;
  std::vector<SpMat> dG;
  Mat dq;  // n x n_p
  Mat df;  // n_eq x n_p
  Mat dg;  // n_in x n_p

  static AssemblySensitivity zeros(const ParametricQp& qp, Eigen::Index n_p);
  void validate(const ParametricQp& qp) const;
};

struct JpcSelection {
  /// 0/1 diagonal over (lambda, mu).
  Vec d;
};

/// sign(lambda_i) with sign(0) = 0 on the inequality block, ones on the
/// equality block.
JpcSelection select_jpc(const Vec& z, Eigen::Index n_eq);

/// Column j is (dH/dp_j) z + dh/dp_j at fixed z, assembled forward-mode from
/// the block sensitivities. x must be recover_primal(qp, dp, z).
Mat dual_rhs(const ParametricQp& qp, const DualProblem& dp,
             const AssemblySensitivity& sens, const Vec& x, const Vec& z);

struct DualJacobian {
  Mat Z;
  /// U was singular and Z is a least-squares solution.
  bool degenerate = false;
};

/// Z = U^-1 V. Rows with J_ii = 0 reduce to -Z_i = 0, so only the block on
/// the selected coordinates is factorized; that block is -gamma H_FF.
DualJacobian dual_jacobian(const DualProblem& dp, const Vec& z, double gamma,
                           const Mat& rhs);

struct SolutionJacobian {
  /// n x n_p element of the conservative Jacobian of x(p).
  Mat Jx_p;
  /// Number of leading parameter coordinates that are state entries.
  Eigen::Index n_state = 0;
  bool degenerate = false;

  auto state() const { return Jx_p.leftCols(n_state); }
  auto theta() const { return Jx_p.rightCols(Jx_p.cols() - n_state); }
};

SolutionJacobian solution_jacobian(const ParametricQp& qp,
                                   const DualProblem& dp,
                                   const AssemblySensitivity& sens,
                                   const Vec& z, const DualJacobian& Z,
                                   Eigen::Index n_state = 0);

/// Convenience: dual_rhs, dual_jacobian and solution_jacobian in sequence.
SolutionJacobian differentiate(const ParametricQp& qp, const DualProblem& dp,
                               const AssemblySensitivity& sens,
                               const QpSolution& sol, Eigen::Index n_state = 0);

/// Independent check: implicit differentiation of the active-set KKT system.
/// Throws SingularKkt unless strict complementarity holds (every active
/// multiplier above min_active_multiplier and no weakly active constraint).
Mat kkt_oracle_jacobian(const ParametricQp& qp,
                        const AssemblySensitivity& sens, const Vec& x,
                        const Vec& z, double min_active_multiplier = 1e-6);

}  // namespace mpctune
