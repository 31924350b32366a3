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

#include "mpctune/mpc.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <utility>

namespace mpctune {

void MpcSpec::validate() const {
  require(N >= 1, ErrorCode::ConfigError, "mpc: horizon must be >= 1");
  model.validate();
  require_dims(state_box.size() == n_x(), "mpc: state box size");
  require_dims(input_box.size() == n_u(), "mpc: input box size");
  require_dims(x_ref.size() == n_x(), "mpc: x_ref size");
  require_dims(u_ref.size() == n_u(), "mpc: u_ref size");
  state_box.validate("mpc state box");
  input_box.validate("mpc input box");
  require(slack_quad_weight > 0.0 && slack_lin_weight > 0.0 && eps > 0.0,
          ErrorCode::ConfigError, "mpc: weights and eps must be positive");
}

Vec PolicyParams::pack() const {
  Vec theta(p_Q.size() + p_R.size() + p_P.size());
  theta << p_Q, p_R, p_P;
  return theta;
}

PolicyParams PolicyParams::unpack(const Vec& theta, Eigen::Index n_x,
                                  Eigen::Index n_u, std::optional<Box> box) {
  require_dims(theta.size() == size(n_x, n_u), "policy params: packed size");
  PolicyParams p;
  p.p_Q = theta.head(n_x);
  p.p_R = theta.segment(n_x, n_u);
  p.p_P = theta.tail(n_x * (n_x + 1) / 2);
  p.theta_box = box ? std::move(*box) : Box::unbounded(theta.size());
  return p;
}

PolicyParams PolicyParams::from_weights(const Vec& q_diag, const Vec& r_diag,
                                        const Mat& P, double eps) {
  const Eigen::Index n_x = q_diag.size();
  require_dims(P.rows() == n_x && P.cols() == n_x, "from_weights: P shape");
  PolicyParams p;
  p.p_Q = (q_diag.array() - eps).max(0.0).sqrt().matrix();
  p.p_R = (r_diag.array() - eps).max(0.0).sqrt().matrix();
  const Mat Pm = 0.5 * (P + P.transpose()) - eps * Mat::Identity(n_x, n_x);
  Eigen::LLT<Mat> llt(Pm);
  require(llt.info() == Eigen::Success, ErrorCode::ConfigError,
          "from_weights: P - eps I is not positive definite");
  const Mat L = llt.matrixL();
  p.p_P.resize(n_x * (n_x + 1) / 2);
  for (Eigen::Index i = 0; i < n_x; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) p.p_P[packed_index(i, j)] = L(i, j);
  p.theta_box = Box::unbounded(p.size());
  return p;
}

Mat PolicyParams::L() const {
  const Eigen::Index n = n_x();
  Mat L = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) L(i, j) = p_P[packed_index(i, j)];
  return L;
}

Mat PolicyParams::Q(double eps) const {
  return Mat(p_Q.array().square().matrix().asDiagonal()) +
         eps * Mat::Identity(n_x(), n_x());
}

Mat PolicyParams::R(double eps) const {
  return Mat(p_R.array().square().matrix().asDiagonal()) +
         eps * Mat::Identity(n_u(), n_u());
}

Mat PolicyParams::P(double eps) const {
  const Mat l = L();
  return l * l.transpose() + eps * Mat::Identity(n_x(), n_x());
}

void PolicyParams::validate(Eigen::Index n_x, Eigen::Index n_u) const {
  require_dims(p_Q.size() == n_x, "policy params: p_Q size");
  require_dims(p_R.size() == n_u, "policy params: p_R size");
  require_dims(p_P.size() == n_x * (n_x + 1) / 2, "policy params: p_P size");
  require_dims(theta_box.size() == size(), "policy params: theta box size");
  theta_box.validate("theta box");
}

MpcLayout::MpcLayout(const MpcSpec& spec)
    : n_x(spec.n_x()), n_u(spec.n_u()), N(spec.N) {
  Eigen::Index state_sides = 0;
  for (Eigen::Index j = 0; j < n_x; ++j) {
    const bool lo = std::isfinite(spec.state_box.lower[j]);
    const bool hi = std::isfinite(spec.state_box.upper[j]);
    if (lo || hi) bounded.push_back(j);
    state_sides += lo + hi;
  }
  Eigen::Index input_sides = 0;
  for (Eigen::Index i = 0; i < n_u; ++i) {
    input_sides += std::isfinite(spec.input_box.lower[i]);
    input_sides += std::isfinite(spec.input_box.upper[i]);
  }
  n_input_rows = N * input_sides;
  n_state_rows = (N + 1) * state_sides;
}

MpcQp assemble(const MpcSpec& spec, const PolicyParams& theta, const Vec& x_t) {
  spec.validate();
  theta.validate(spec.n_x(), spec.n_u());
  require_dims(x_t.size() == spec.n_x(), "assemble: x_t size");

  MpcQp out;
  out.layout = MpcLayout(spec);
  const MpcLayout& L = out.layout;
  const Eigen::Index nx = L.n_x, nu = L.n_u, N = L.N, ns = L.n_s();
  ParametricQp& qp = out.qp;
  qp = ParametricQp::zeros(L.n_decision(), L.n_eq(), L.n_in());

  const Mat Qm = theta.Q(spec.eps);
  const Mat Rm = theta.R(spec.eps);
  const Mat Pm = theta.P(spec.eps);
  for (Eigen::Index k = 0; k < N; ++k) {
    qp.Q.block(L.x_offset(k), L.x_offset(k), nx, nx) = 2.0 * Qm;
    qp.q.segment(L.x_offset(k), nx) = -2.0 * Qm * spec.x_ref;
    qp.Q.block(L.u_offset(k), L.u_offset(k), nu, nu) = 2.0 * Rm;
    qp.q.segment(L.u_offset(k), nu) = -2.0 * Rm * spec.u_ref;
  }
  qp.Q.block(L.x_offset(N), L.x_offset(N), nx, nx) = 2.0 * Pm;
  qp.q.segment(L.x_offset(N), nx) = -2.0 * Pm * spec.x_ref;
  for (Eigen::Index k = 0; k <= N; ++k) {
    for (Eigen::Index b = 0; b < ns; ++b) {
      const Eigen::Index s = L.s_offset(k) + b;
      qp.Q(s, s) = 2.0 * spec.slack_quad_weight;
      qp.q[s] = spec.slack_lin_weight;
    }
  }

  // Equalities: x_0 = x_t, then x_{k+1} - A x_k - B u_k = c.
  qp.F.block(0, L.x_offset(0), nx, nx).setIdentity();
  qp.f.head(nx) = x_t;
  for (Eigen::Index k = 0; k < N; ++k) {
    const Eigen::Index r = (k + 1) * nx;
    qp.F.block(r, L.x_offset(k + 1), nx, nx).setIdentity();
    qp.F.block(r, L.x_offset(k), nx, nx) = -spec.model.A;
    qp.F.block(r, L.u_offset(k), nx, nu) = -spec.model.B;
    qp.f.segment(r, nx) = spec.model.c;
  }

  // Inequalities: hard input box, relaxed state box, nonnegative slacks.
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < N; ++k) {
    for (Eigen::Index i = 0; i < nu; ++i) {
      const Eigen::Index c = L.u_offset(k) + i;
      if (std::isfinite(spec.input_box.upper[i])) {
        qp.G(r, c) = 1.0;
        qp.g[r++] = spec.input_box.upper[i];
      }
      if (std::isfinite(spec.input_box.lower[i])) {
        qp.G(r, c) = -1.0;
        qp.g[r++] = -spec.input_box.lower[i];
      }
    }
  }
  for (Eigen::Index k = 0; k <= N; ++k) {
    for (Eigen::Index b = 0; b < ns; ++b) {
      const Eigen::Index j = L.bounded[b];
      const Eigen::Index c = L.x_offset(k) + j;
      const Eigen::Index s = L.s_offset(k) + b;
      if (std::isfinite(spec.state_box.upper[j])) {
        qp.G(r, c) = 1.0;
        qp.G(r, s) = -1.0;
        qp.g[r++] = spec.state_box.upper[j];
      }
      if (std::isfinite(spec.state_box.lower[j])) {
        qp.G(r, c) = -1.0;
        qp.G(r, s) = -1.0;
        qp.g[r++] = -spec.state_box.lower[j];
      }
    }
  }
  for (Eigen::Index k = 0; k <= N; ++k) {
    for (Eigen::Index b = 0; b < ns; ++b) qp.G(r++, L.s_offset(k) + b) = -1.0;
  }

  // Sensitivity with respect to p = (x_t, theta).
  const Eigen::Index n = qp.n();
  const Eigen::Index n_th = theta.size();
  AssemblySensitivity& S = out.sens;
  S = AssemblySensitivity::zeros(qp, nx + n_th);
  S.dQ.assign(S.n_p, SpMat(n, n));
  S.df.topLeftCorner(nx, nx).setIdentity();

  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index i = 0; i < nx; ++i) {
    const Eigen::Index col = nx + i;
    trip.clear();
    const double d = 4.0 * theta.p_Q[i];
    for (Eigen::Index k = 0; k < N; ++k) {
      const Eigen::Index c = L.x_offset(k) + i;
      trip.emplace_back(c, c, d);
      S.dq(c, col) = -d * spec.x_ref[i];
    }
    S.dQ[col].setFromTriplets(trip.begin(), trip.end());
  }
  for (Eigen::Index i = 0; i < nu; ++i) {
    const Eigen::Index col = nx + nx + i;
    trip.clear();
    const double d = 4.0 * theta.p_R[i];
    for (Eigen::Index k = 0; k < N; ++k) {
      const Eigen::Index c = L.u_offset(k) + i;
      trip.emplace_back(c, c, d);
      S.dq(c, col) = -d * spec.u_ref[i];
    }
    S.dQ[col].setFromTriplets(trip.begin(), trip.end());
  }
  // dP/dL(a, b) = e_a l_b' + l_b e_a' with l_b the b-th column of L.
  const Mat Lm = theta.L();
  const Eigen::Index xN = L.x_offset(N);
  for (Eigen::Index a = 0; a < nx; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      const Eigen::Index col = nx + nx + nu + PolicyParams::packed_index(a, b);
      Mat dP = Mat::Zero(nx, nx);
      dP.row(a) += Lm.col(b).transpose();
      dP.col(a) += Lm.col(b);
      trip.clear();
      for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < nx; ++j)
          if (dP(i, j) != 0.0) trip.emplace_back(xN + i, xN + j, 2.0 * dP(i, j));
      S.dQ[col].setFromTriplets(trip.begin(), trip.end());
      S.dq.col(col).segment(xN, nx) = -2.0 * dP * spec.x_ref;
    }
  }
  return out;
}

MpcResult mpc(const MpcSpec& spec, const PolicyParams& theta, const Vec& x_t,
              const MpcOptions& options) {
  const MpcQp m = assemble(spec, theta, x_t);
  const DualProblem dp = build_dual(m.qp);
  MpcResult out;
  out.solution = solve_qp(m.qp, dp, options.qp);
  const QpSolution& sol = out.solution;
  MpcDiagnostics& diag = out.diagnostics;
  diag.status = sol.status;
  diag.licq_ok = sol.status != QpStatus::LicqViolated;
  diag.dual_iterations = sol.iterations;
  diag.residual = sol.residual;
  if (sol.status == QpStatus::MaxIter) {
    throw Error(ErrorCode::QpFailed,
                "mpc: dual solver did not converge (residual " +
                    std::to_string(sol.residual) + ")");
  }
  const MpcLayout& L = m.layout;
  out.u0 = sol.x.segment(L.u_offset(0), L.n_u);
  if (L.n_s() > 0) {
    diag.max_slack = sol.x.segment(L.s_offset(0), (L.N + 1) * L.n_s()).maxCoeff();
  }
  if (options.jacobians) {
    const SolutionJacobian J = differentiate(m.qp, dp, m.sens, sol, L.n_x);
    diag.degenerate = J.degenerate;
    out.J_x = J.state().middleRows(L.u_offset(0), L.n_u);
    out.J_theta = J.theta().middleRows(L.u_offset(0), L.n_u);
  }
  return out;
}

MpcController::MpcController(MpcSpec spec, PolicyParams theta, MpcOptions options)
    : spec_(std::move(spec)), theta_(std::move(theta)), options_(std::move(options)) {}

MpcResult MpcController::operator()(const Vec& x_t) {
  MpcOptions opts = options_;
  if (warm_) opts.qp.dual.warm_start = warm_;
  MpcResult r = mpc(spec_, theta_, x_t, opts);
  warm_ = r.solution.z;
  return r;
}

}  // namespace mpctune
