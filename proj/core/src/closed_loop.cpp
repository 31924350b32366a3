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

#include "mpctune/closed_loop.hpp"

namespace mpctune {

Rollout rollout(const Dynamics& plant, const MpcSpec& spec,
                const PolicyParams& theta, const Vec& x0,
                const RolloutOptions& options) {
  require(options.T >= 1, ErrorCode::ConfigError, "rollout: T must be >= 1");
  require_dims(x0.size() == spec.n_x(), "rollout: x0 size");
  MpcOptions mopts = options.mpc;
  mopts.jacobians = options.jacobians;
  MpcController ctrl(spec, theta, mopts);

  auto r = std::make_shared<Rollout>();
  r->states.reserve(static_cast<std::size_t>(options.T) + 1);
  r->states.push_back(x0);
  r->feasible.push_back(spec.state_box.contains(x0));
  for (int t = 0; t < options.T; ++t) {
    MpcResult m;
    try {
      m = ctrl(r->states.back());
    } catch (const Error& e) {
      throw RolloutError(e, t, r);
    }
    r->inputs.push_back(m.u0);
    if (options.jacobians) {
      r->J_x.push_back(std::move(m.J_x));
      r->J_theta.push_back(std::move(m.J_theta));
    }
    r->active_sets.push_back(std::move(m.solution.active_set));
    r->degenerate_steps += m.diagnostics.degenerate;
    r->licq_violations += !m.diagnostics.licq_ok;
    r->max_dual_iterations = std::max(r->max_dual_iterations, m.diagnostics.dual_iterations);
    Vec next = plant(r->states.back(), m.u0);
    r->feasible.push_back(spec.state_box.contains(next));
    r->states.push_back(std::move(next));
  }
  return std::move(*r);
}

void ObjectiveSpec::validate(Eigen::Index n_x, Eigen::Index n_u) const {
  require_dims(Qc.rows() == n_x && Qc.cols() == n_x, "objective: Qc shape");
  require_dims(Pc.rows() == n_x && Pc.cols() == n_x, "objective: Pc shape");
  require_dims(Rc.rows() == n_u && Rc.cols() == n_u, "objective: Rc shape");
  require_dims(x_ref.size() == n_x && u_ref.size() == n_u, "objective: reference sizes");
  require_dims(state_box.size() == n_x, "objective: state box size");
  require(penalty_weight >= 0.0, ErrorCode::ConfigError,
          "objective: penalty weight must be nonnegative");
}

ObjectiveValue objective(const Rollout& r, const ObjectiveSpec& ospec) {
  ObjectiveValue v;
  const int T = r.T();
  v.cost_terms.reserve(static_cast<std::size_t>(T) + 1);
  for (int t = 0; t < T; ++t) {
    const Vec dx = r.states[t] - ospec.x_ref;
    const Vec du = r.inputs[t] - ospec.u_ref;
    v.cost_terms.push_back(dx.dot(ospec.Qc * dx) + du.dot(ospec.Rc * du));
    v.C += v.cost_terms.back();
  }
  const Vec dT = r.states[T] - ospec.x_ref;
  v.cost_terms.push_back(dT.dot(ospec.Pc * dT));
  v.C += v.cost_terms.back();
  double dist = 0.0;
  for (const Vec& x : r.states) dist += ospec.state_box.dist1(x);
  v.P = ospec.penalty_weight * dist;
  return v;
}

Vec dist1_subgradient(const Box& box, const Vec& x) {
  Vec s = Vec::Zero(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > box.upper[i]) s[i] = 1.0;
    else if (x[i] < box.lower[i]) s[i] = -1.0;
  }
  return s;
}

Vec model_gradient(const Rollout& r, const LinearModel& model, const ObjectiveSpec& ospec) {
  require(r.has_jacobians(), ErrorCode::ConfigError,
          "model_gradient: rollout has no Jacobians");
  const int T = r.T();
  const Eigen::Index n_x = model.n_x();
  const Eigen::Index n_th = r.J_theta.front().cols();
  Mat Jx = Mat::Zero(n_x, n_th);
  Vec g = Vec::Zero(n_th);
  const double w = ospec.penalty_weight;
  for (int t = 0; t < T; ++t) {
    const Mat Ju = r.J_x[t] * Jx + r.J_theta[t];
    const Vec gx = 2.0 * ospec.Qc * (r.states[t] - ospec.x_ref) +
                   w * dist1_subgradient(ospec.state_box, r.states[t]);
    const Vec gu = 2.0 * ospec.Rc * (r.inputs[t] - ospec.u_ref);
    g.noalias() += Jx.transpose() * gx + Ju.transpose() * gu;
    Jx = model.A * Jx + model.B * Ju;
  }
  const Vec gT = 2.0 * ospec.Pc * (r.states[T] - ospec.x_ref) +
                 w * dist1_subgradient(ospec.state_box, r.states[T]);
  g.noalias() += Jx.transpose() * gT;
  return g;
}

}  // namespace mpctune
