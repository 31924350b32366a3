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
 * @brief Closed-loop rollout of the true plant under the MPC policy, the
 * upper-level objective C + P, and its model-based gradient.
 */

#include "mpctune/mpc.hpp"

#include <memory>
#include <vector>

namespace mpctune {

struct Rollout {
  /// x_0..x_T.
  std::vector<Vec> states;
  /// u_0..u_{T-1}.
  std::vector<Vec> inputs;
  /// d u_t / d x_t and d u_t / d theta from the MPC at step t.
  std::vector<Mat> J_x;
  std::vector<Mat> J_theta;
  /// Active sets of each MPC solve, to detect pattern changes.
  std::vector<IndexList> active_sets;
  /// x_t inside the state box, for t = 0..T.
  std::vector<bool> feasible;
  int degenerate_steps = 0;
  int licq_violations = 0;
  int max_dual_iterations = 0;

  int T() const { return static_cast<int>(inputs.size()); }
  bool has_jacobians() const { return !J_x.empty(); }
};

/// Raised when an MPC solve fails mid-rollout; carries the steps completed.
class RolloutError : public Error {
 public:
  RolloutError(const Error& cause, int step, std::shared_ptr<const Rollout> partial)
      : Error(cause.code(), "rollout step " + std::to_string(step) + ": " + cause.what()),
        step_(step),
        partial_(std::move(partial)) {}

  int step() const { return step_; }
  const Rollout& partial() const { return *partial_; }

 private:
  int step_;
  std::shared_ptr<const Rollout> partial_;
};

struct RolloutOptions {
  int T = 1;
  /// Skip the Jacobians when only the objective value is needed.
  bool jacobians = true;
  MpcOptions mpc;
};

/// Simulates x_{t+1} = plant(x_t, u_t) with u_t the first MPC input.
Rollout rollout(const Dynamics& plant, const MpcSpec& spec,
                const PolicyParams& theta, const Vec& x0,
                const RolloutOptions& options);

struct ObjectiveSpec {
  Mat Qc;
  Mat Rc;
  Mat Pc;
  Vec x_ref;
  Vec u_ref;
  double penalty_weight = 300.0;
  Box state_box;

  void validate(Eigen::Index n_x, Eigen::Index n_u) const;
};

struct ObjectiveValue {
  double C = 0.0;
  double P = 0.0;
  /// Stage terms t = 0..T-1 followed by the terminal term.
  std::vector<double> cost_terms;

  double total() const { return C + P; }
};

/// C = |x_T - x_ref|_Pc^2 + sum_{t<T} |x_t - x_ref|_Qc^2 + |u_t - u_ref|_Rc^2,
/// P = penalty_weight * sum_{t<=T} dist1(x_t, state_box).
ObjectiveValue objective(const Rollout& r, const ObjectiveSpec& ospec);

/// Gradient of C + P along the rollout, propagating state sensitivities
/// through the prediction model: J_u = J_mpc_x J_x + J_mpc_theta and
/// J_x+ = A J_x + B J_u with J_x0 = 0. The penalty contributes its sign
/// pattern (zero on the boundary).
Vec model_gradient(const Rollout& r, const LinearModel& model, const ObjectiveSpec& ospec);

/// Sign pattern of the dist1 subgradient: +1 above, -1 below, 0 otherwise.
Vec dist1_subgradient(const Box& box, const Vec& x);

}  // namespace mpctune
