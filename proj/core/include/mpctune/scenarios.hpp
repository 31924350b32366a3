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
 * @brief Benchmark scenarios: plant, prediction model, MPC, objective,
 * initial state and initial parameters bundled together.
 */

#include "mpctune/closed_loop.hpp"
#include "mpctune/optimizer.hpp"
#include "mpctune/plants.hpp"

#include <string>

namespace mpctune {

struct Scenario {
  std::string name;
  Dynamics plant;
  /// The prediction model lives in mpc.model.
  MpcSpec mpc;
  ObjectiveSpec objective;
  Vec x0;
  int T = 1;
  /// Carries the admissible box.
  PolicyParams theta0;
};

/// p_Q, p_R and the diagonal of L in [0, bound]; off-diagonal entries of L
/// in [-bound, bound].
Box default_theta_box(Eigen::Index n_x, Eigen::Index n_u, double bound = 1e3);

Rollout simulate(const Scenario& s, const Vec& theta, bool jacobians);
Evaluation evaluate(const Scenario& s, const Vec& theta, bool with_gradient);
/// Captures the scenario by value.
Evaluator make_evaluator(const Scenario& s);

struct ScalarOptions {
  double a = 1.1;
  double b = 1.0;
  /// Model gains; equal to the plant unless overridden.
  double model_a = 1.1;
  double model_b = 1.0;
  int N = 5;
  int T = 20;
  double x0 = 1.5;
  double x_max = 2.0;
  double u_max = 1.0;
};
Scenario scalar_lti(const ScalarOptions& o = {});

struct DoubleIntegratorOptions {
  double dt = 0.1;
  /// Prediction model input gain is (1 - mismatch) times the plant's.
  double mismatch = 0.0;
  int N = 10;
  int T = 40;
  Vec x0 = (Vec(2) << 2.0, 0.0).finished();
  double p_max = 3.0;
  double v_max = 1.0;
  double u_max = 2.0;
  /// Empty: p_Q = p_R = 1 and L from the DARE of the model.
  Vec theta0;
};
Scenario double_integrator(const DoubleIntegratorOptions& o = {});

struct QuadcopterOptions {
  QuadcopterParams params;
  int N = 8;
  int T = 60;
  /// Identification data: closed-loop runs of a hover LQR plus rotor noise.
  int n_traj = 100;
  int T_data = 50;
  double exploration = 10.0;
  double x0_spread = 0.1;
  std::uint64_t data_seed = 2024;
  double penalty_weight = 300.0;
  /// Empty: DARE initialisation with the identified model.
  Vec theta0;
};

/// Optionally hands back the identification data.
Scenario quadcopter(const QuadcopterOptions& o = {}, Dataset* data = nullptr);

/// Identification protocol used by the quadcopter scenario.
Dataset quadcopter_dataset(const QuadcopterOptions& o, const Vec& x_op);
LinearModel identify_quadcopter(const Dataset& data);

}  // namespace mpctune
