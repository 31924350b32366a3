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
 * @brief Strictly convex QPs in standard form and their dual.
 *
 * The primal problem is
 *
 *   min_x  1/2 x'Qx + q'x   s.t.  Fx = f,  Gx <= g,
 *
 * with Q positive definite. Its dual over z = (lambda, mu) is the bound
 * constrained problem
 *
 *   min_z  1/2 z'Hz + h'z   s.t.  lambda >= 0,
 *
 * where, with A = [G; F] and b = [g; f], H = A Q^-1 A' and h = A Q^-1 q + b.
 * The inequality block always comes first. The primal is recovered as
 * x = -Q^-1 (A'z + q).
 */

#include "mpctune/common.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>
#include <optional>
#include <vector>

namespace mpctune {

using SpMat = Eigen::SparseMatrix<double>;
using IndexList = std::vector<Eigen::Index>;

struct ParametricQp {
  Mat Q;
  Vec q;
  Mat F;
  Vec f;
  Mat G;
  Vec g;

  Eigen::Index n() const { return Q.rows(); }
  Eigen::Index n_eq() const { return F.rows(); }
  Eigen::Index n_in() const { return G.rows(); }

  /// Zero-filled problem with the given dimensions.
  static ParametricQp zeros(Eigen::Index n, Eigen::Index n_eq,
                            Eigen::Index n_in);

  /// Throws DimensionMismatch on inconsistent blocks and NotStronglyConvex
  /// when Q is not symmetric.
  void validate() const;

  /// Stacked constraint data A = [G; F], b = [g; f].
  Mat stacked_A() const;
  Vec stacked_b() const;
};

/// Cholesky factor of Q together with the stacked constraint matrix in sparse
/// form. Shared (read-only) between a DualProblem and the solves that reuse it.
class QFactor {
 public:
  explicit QFactor(const ParametricQp& qp);

  Vec solve(const Vec& rhs) const { return llt_.solve(rhs); }
  Mat solve(const Mat& rhs) const { return llt_.solve(rhs); }

  const SpMat& A() const { return A_; }
  /// L^-1 P A' for the factorization P Q P' = L L', so A Q^-1 A' = W' W.
  Mat whitened_At() const;

 private:
  Eigen::SimplicialLLT<SpMat> llt_;
  SpMat A_;
};

struct DualProblem {
  Mat H;
  Vec h;
  Eigen::Index n_in = 0;
  Eigen::Index n_eq = 0;
  /// Same entries as H; the projected-gradient iterations run on it.
  SpMat H_sparse;
  /// Whitened constraint rows as columns, H = W' W. Rank decisions use W
  /// rather than H so they do not square the conditioning of Q.
  Mat W;
  std::shared_ptr<const QFactor> factor;

  Eigen::Index size() const { return n_in + n_eq; }
  double objective(const Vec& z) const;
  Vec gradient(const Vec& z) const;
};

/// Throws NotStronglyConvex if Q cannot be factorized.
DualProblem build_dual(const ParametricQp& qp);

/// Clamp the inequality block of z at zero; equality duals are free.
Vec project_dual(const Vec& z, Eigen::Index n_in);

/// ||z - P_C(z - gamma (Hz + h))||_inf.
double fixed_point_residual(const DualProblem& dp, const Vec& z, double gamma);

/// Largest eigenvalue of H from a fixed-start power iteration.
double estimate_lambda_max(const DualProblem& dp, int iterations = 20);

/// Default dual step, 0.9 / lambda_max(H).
double default_gamma(const DualProblem& dp);

struct DualSolveOptions {
  /// Step of the projected-gradient map; <= 0 selects default_gamma.
  double gamma = 0.0;
  double tol = 1e-8;
  /// <= 0 selects 200 * (n_in + n_eq).
  int max_iter = 0;
  /// Active-set refinement attempted every polish_interval iterations.
  bool polish = true;
  int polish_interval = 25;
  std::optional<Vec> warm_start;
};

struct DualSolveResult {
  Vec z;
  double gamma = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  /// The returned iterate came from an active-set refinement.
  bool polished = false;
};

/// Projected gradient on the dual, z <- P_C(z - gamma (Hz + h)). Returns the
/// best iterate with converged = false when max_iter is exhausted.
DualSolveResult solve_dual(const DualProblem& dp,
                           const DualSolveOptions& options = {});

/// x = -Q^-1 (G'lambda + F'mu + q), reusing the factor cached in dp.
Vec recover_primal(const ParametricQp& qp, const DualProblem& dp,
                   const Vec& z);
Vec recover_primal(const ParametricQp& qp, const Vec& z);

/// True iff the active rows of G stacked on F have full row rank.
bool check_licq(const ParametricQp& qp, const IndexList& active_set,
                double threshold = 1e-8);

IndexList active_set(const Vec& z, Eigen::Index n_in, double tol_act = 1e-7);

enum class QpStatus { Converged, MaxIter, LicqViolated };

std::string_view to_string(QpStatus status);

struct QpSolution {
  Vec x;
  Vec z;
  IndexList active_set;
  QpStatus status = QpStatus::MaxIter;
  int iterations = 0;
  double gamma = 0.0;
  double residual = 0.0;
};

struct QpSolveOptions {
  DualSolveOptions dual;
  double tol_act = 1e-7;
  bool check_licq = true;
};

QpSolution solve_qp(const ParametricQp& qp, const DualProblem& dp,
                    const QpSolveOptions& options = {});
QpSolution solve_qp(const ParametricQp& qp, const QpSolveOptions& options = {});

struct KktResiduals {
  double stationarity = 0.0;
  double equality = 0.0;
  /// Largest positive part of Gx - g.
  double inequality = 0.0;
  double complementarity = 0.0;
  /// Largest negative part of lambda.
  double dual_feasibility = 0.0;

  double max() const;
};

KktResiduals kkt_residuals(const ParametricQp& qp, const Vec& x, const Vec& z);

}  // namespace mpctune
