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
 * @brief Horizon-N tracking MPC assembled as a parametric QP.
 *
 * Decision vector: (x_0..x_N, u_0..u_{N-1}, s_0..s_N), where s_k holds one
 * slack per state coordinate that has at least one finite bound. The same
 * slack relaxes both sides of that coordinate's box. The QP parameter is
 * p = (x_t, theta); theta only enters the cost.
 */

#include "mpctune/linear_model.hpp"
#include "mpctune/qp.hpp"
#include "mpctune/qp_diff.hpp"

#include <optional>

namespace mpctune {

struct MpcSpec {
  int N = 1;
  LinearModel model;
  Box state_box;
  Box input_box;
  Vec x_ref;
  Vec u_ref;
  double slack_quad_weight = 1.0;
  double slack_lin_weight = 25.0;
  double eps = 1e-6;

  Eigen::Index n_x() const { return model.n_x(); }
  Eigen::Index n_u() const { return model.n_u(); }
  void validate() const;
};

/// theta = (p_Q, p_R, p_P). p_P packs the lower triangle of L row by row:
/// L(i, j) = p_P[i (i + 1) / 2 + j] for j <= i.
struct PolicyParams {
  Vec p_Q;
  Vec p_R;
  Vec p_P;
  Box theta_box;

  static Eigen::Index size(Eigen::Index n_x, Eigen::Index n_u) {
    return n_x + n_u + n_x * (n_x + 1) / 2;
  }
  static Eigen::Index packed_index(Eigen::Index i, Eigen::Index j) {
    return i * (i + 1) / 2 + j;
  }

  Eigen::Index n_x() const { return p_Q.size(); }
  Eigen::Index n_u() const { return p_R.size(); }
  Eigen::Index size() const { return size(n_x(), n_u()); }

  Vec pack() const;
  /// Inverse of pack; the box is unbounded unless one is given.
  static PolicyParams unpack(const Vec& theta, Eigen::Index n_x,
                             Eigen::Index n_u,
                             std::optional<Box> theta_box = std::nullopt);
  /// Parameters reproducing the given weights: p_Q = sqrt(diag(Q) - eps),
  /// p_R likewise and L = chol(P - eps I). Negative remainders clamp at 0.
  static PolicyParams from_weights(const Vec& q_diag, const Vec& r_diag,
                                   const Mat& P, double eps = 1e-6);

  Mat L() const;
  Mat Q(double eps) const;
  Mat R(double eps) const;
  Mat P(double eps) const;
  void validate(Eigen::Index n_x, Eigen::Index n_u) const;
};

/// Index bookkeeping for the decision vector and the constraint rows.
struct MpcLayout {
  Eigen::Index n_x = 0, n_u = 0, N = 0;
  /// State coordinates with a finite bound, in increasing order.
  IndexList bounded;
  Eigen::Index n_input_rows = 0;
  Eigen::Index n_state_rows = 0;

  explicit MpcLayout(const MpcSpec& spec);
  MpcLayout() = default;

  Eigen::Index n_s() const { return static_cast<Eigen::Index>(bounded.size()); }
  Eigen::Index x_offset(Eigen::Index k) const { return k * n_x; }
  Eigen::Index u_offset(Eigen::Index k) const { return (N + 1) * n_x + k * n_u; }
  Eigen::Index s_offset(Eigen::Index k) const {
    return (N + 1) * n_x + N * n_u + k * n_s();
  }
  Eigen::Index n_decision() const { return (N + 1) * (n_x + n_s()) + N * n_u; }
  Eigen::Index n_eq() const { return (N + 1) * n_x; }
  Eigen::Index n_in() const { return n_input_rows + n_state_rows + (N + 1) * n_s(); }
};

struct MpcQp {
  ParametricQp qp;
  /// With respect to p = (x_t, theta).
  AssemblySensitivity sens;
  MpcLayout layout;
};

MpcQp assemble(const MpcSpec& spec, const PolicyParams& theta, const Vec& x_t);

struct MpcDiagnostics {
  QpStatus status = QpStatus::Converged;
  bool licq_ok = true;
  bool degenerate = false;
  int dual_iterations = 0;
  double residual = 0.0;
  /// Largest entry of the slack block.
  double max_slack = 0.0;
};

struct MpcResult {
  Vec u0;
  Mat J_x;      // n_u x n_x
  Mat J_theta;  // n_u x n_theta
  MpcDiagnostics diagnostics;
  /// Full QP solution, for warm starts and inspection.
  QpSolution solution;
};

struct MpcOptions {
  QpSolveOptions qp;
  bool jacobians = true;
};

/// Solves the MPC QP at x_t and differentiates u_0 with respect to x_t and
/// theta. Throws QpFailed when the dual solver does not converge.
MpcResult mpc(const MpcSpec& spec, const PolicyParams& theta, const Vec& x_t,
              const MpcOptions& options = {});

/// Stateful wrapper for one rollout: warm-starts each solve from the
/// previous dual solution.
class MpcController {
 public:
  MpcController(MpcSpec spec, PolicyParams theta, MpcOptions options = {});

  MpcResult operator()(const Vec& x_t);
  void reset() { warm_.reset(); }

  const MpcSpec& spec() const { return spec_; }
  const PolicyParams& theta() const { return theta_; }

 private:
  MpcSpec spec_;
  PolicyParams theta_;
  MpcOptions options_;
  std::optional<Vec> warm_;
};

}  // namespace mpctune
