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

#include "mpctune/scenarios.hpp"

#include <numbers>

namespace mpctune {

Box default_theta_box(Eigen::Index n_x, Eigen::Index n_u, double bound) {
  const Eigen::Index n = PolicyParams::size(n_x, n_u);
  Box box{Vec::Zero(n), Vec::Constant(n, bound)};
  for (Eigen::Index i = 0; i < n_x; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      box.lower[n_x + n_u + PolicyParams::packed_index(i, j)] = -bound;
  return box;
}

Rollout simulate(const Scenario& s, const Vec& theta, bool jacobians) {
  RolloutOptions ro;
  ro.T = s.T;
  ro.jacobians = jacobians;
  const PolicyParams th = PolicyParams::unpack(theta, s.mpc.n_x(), s.mpc.n_u());
  return rollout(s.plant, s.mpc, th, s.x0, ro);
}

Evaluation evaluate(const Scenario& s, const Vec& theta, bool with_gradient) {
  const Rollout r = simulate(s, theta, with_gradient);
  const ObjectiveValue v = objective(r, s.objective);
  Evaluation e;
  e.C = v.C;
  e.P = v.P;
  e.degenerate_steps = r.degenerate_steps;
  e.licq_violations = r.licq_violations;
  if (with_gradient) e.d1 = model_gradient(r, s.mpc.model, s.objective);
  return e;
}

Evaluator make_evaluator(const Scenario& s) {
  return [s](const Vec& theta, bool g) { return evaluate(s, theta, g); };
}

Scenario scalar_lti(const ScalarOptions& o) {
  Scenario s;
  s.name = "scalar_lti";
  const double a = o.a, b = o.b;
  s.plant = [a, b](const Vec& x, const Vec& u) { return Vec(a * x + b * u); };
  s.mpc.N = o.N;
  s.mpc.model = LinearModel::linear(Mat::Constant(1, 1, o.model_a), Mat::Constant(1, 1, o.model_b));
  s.mpc.state_box = {Vec::Constant(1, -o.x_max), Vec::Constant(1, o.x_max)};
  s.mpc.input_box = {Vec::Constant(1, -o.u_max), Vec::Constant(1, o.u_max)};
  s.mpc.x_ref = Vec::Zero(1);
  s.mpc.u_ref = Vec::Zero(1);
  s.objective.Qc = Mat::Identity(1, 1);
  s.objective.Rc = 0.1 * Mat::Identity(1, 1);
  s.objective.Pc = Mat::Identity(1, 1);
  s.objective.x_ref = s.mpc.x_ref;
  s.objective.u_ref = s.mpc.u_ref;
  s.objective.state_box = s.mpc.state_box;
  s.x0 = Vec::Constant(1, o.x0);
  s.T = o.T;
  s.theta0 = PolicyParams::unpack(Vec::Ones(3), 1, 1, default_theta_box(1, 1));
  return s;
}

Scenario double_integrator(const DoubleIntegratorOptions& o) {
  Scenario s;
  s.name = "double_integrator";
  Mat A(2, 2), B(2, 1);
  A << 1.0, o.dt, 0.0, 1.0;
  B << 0.5 * o.dt * o.dt, o.dt;
  s.plant = [A, B](const Vec& x, const Vec& u) { return Vec(A * x + B * u); };
  s.mpc.N = o.N;
  s.mpc.model = LinearModel::linear(A, (1.0 - o.mismatch) * B);
  s.mpc.state_box = {(Vec(2) << -o.p_max, -o.v_max).finished(),
                     (Vec(2) << o.p_max, o.v_max).finished()};
  s.mpc.input_box = {Vec::Constant(1, -o.u_max), Vec::Constant(1, o.u_max)};
  s.mpc.x_ref = Vec::Zero(2);
  s.mpc.u_ref = Vec::Zero(1);
  s.objective.Qc = (Vec(2) << 1.0, 0.1).finished().asDiagonal();
  s.objective.Rc = 0.1 * Mat::Identity(1, 1);
  s.objective.Pc = Mat::Identity(2, 2);
  s.objective.x_ref = s.mpc.x_ref;
  s.objective.u_ref = s.mpc.u_ref;
  s.objective.state_box = s.mpc.state_box;
  s.x0 = o.x0;
  s.T = o.T;
  const Box box = default_theta_box(2, 1);
  if (o.theta0.size() > 0) {
    s.theta0 = PolicyParams::unpack(o.theta0, 2, 1, box);
  } else {
    const Mat P = solve_dare(s.mpc.model.A, s.mpc.model.B, Mat::Identity(2, 2),
                             Mat::Identity(1, 1));
    s.theta0 = PolicyParams::from_weights(Vec::Ones(2), Vec::Ones(1), P);
    s.theta0.theta_box = box;
  }
  return s;
}

Dataset quadcopter_dataset(const QuadcopterOptions& o, const Vec& x_op) {
  const QuadcopterParams& p = o.params;
  const LinearModel lin = hover_linearization(p, x_op);
  const Mat Q = Mat::Identity(kQuadStates, kQuadStates);
  const Mat R = 1e-4 * Mat::Identity(kQuadInputs, kQuadInputs);
  const Mat K = lqr_gain(lin.A, lin.B, R, solve_dare(lin.A, lin.B, Q, R));
  const Vec u_h = Vec::Constant(kQuadInputs, hover_speed(p));
  const double noise = o.exploration;
  const double spread = o.x0_spread;
  return collect_trajectories(
      quadcopter_plant(p),
      [K, u_h, x_op, noise](const Vec& x, CounterRng& rng) {
        return Vec(u_h - K * (x - x_op) + noise * rng.normal_vector(kQuadInputs));
      },
      o.n_traj, o.T_data,
      [x_op, spread](CounterRng& rng) {
        return Vec(x_op + spread * rng.normal_vector(kQuadStates));
      },
      o.data_seed);
}

LinearModel identify_quadcopter(const Dataset& data) {
  FitOptions f;
  f.with_offset = true;
  return fit_linear_model(data, f);
}

Scenario quadcopter(const QuadcopterOptions& o, Dataset* data_out) {
  const QuadcopterParams& p = o.params;
  p.validate();
  Scenario s;
  s.name = "quadcopter";
  s.plant = quadcopter_plant(p);

  Vec x_ref = Vec::Zero(kQuadStates);
  x_ref[0] = -6.0;
  x_ref[1] = -3.5;
  const Vec u_ref = Vec::Constant(kQuadInputs, hover_speed(p));

  Dataset data = quadcopter_dataset(o, x_ref);
  s.mpc.model = identify_quadcopter(data);
  if (data_out) *data_out = std::move(data);

  const double pi = std::numbers::pi;
  Vec hi(kQuadStates);
  hi << kInf, kInf, kInf, 2.0, 2.0, 2.0, pi / 4, pi / 4, pi / 4, pi / 8, pi / 8, pi / 8;
  s.mpc.N = o.N;
  s.mpc.state_box = {-hi, hi};
  s.mpc.input_box = {Vec::Zero(kQuadInputs), Vec::Constant(kQuadInputs, p.omega_max)};
  s.mpc.x_ref = x_ref;
  s.mpc.u_ref = u_ref;

  Vec q(kQuadStates), pc(kQuadStates);
  q << Vec::Ones(6), 0.1 * Vec::Ones(6);
  pc << Vec::Ones(6), 1e3 * Vec::Ones(3), Vec::Ones(3);
  const Vec r = 0.01 * Vec::Ones(kQuadInputs);
  s.objective.Qc = q.asDiagonal();
  s.objective.Rc = r.asDiagonal();
  s.objective.Pc = pc.asDiagonal();
  s.objective.x_ref = x_ref;
  s.objective.u_ref = u_ref;
  s.objective.penalty_weight = o.penalty_weight;
  s.objective.state_box = s.mpc.state_box;

  s.x0 = Vec::Zero(kQuadStates);
  s.T = o.T;
  const Box box = default_theta_box(kQuadStates, kQuadInputs);
  if (o.theta0.size() > 0) {
    s.theta0 = PolicyParams::unpack(o.theta0, kQuadStates, kQuadInputs, box);
  } else {
    const Mat P = solve_dare(s.mpc.model.A, s.mpc.model.B, Mat(s.objective.Qc),
                             Mat(s.objective.Rc));
    s.theta0 = PolicyParams::from_weights(q, r, P, s.mpc.eps);
    s.theta0.theta_box = box;
  }
  return s;
}

}  // namespace mpctune
