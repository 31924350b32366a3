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

#include "mpctune/qp_diff.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>

namespace mpctune {

AssemblySensitivity AssemblySensitivity::zeros(const ParametricQp& qp,
                                               Eigen::Index n_p) {
  AssemblySensitivity s;
  s.n_p = n_p;
  s.dq = Mat::Zero(qp.n(), n_p);
  s.df = Mat::Zero(qp.n_eq(), n_p);
  s.dg = Mat::Zero(qp.n_in(), n_p);
  return s;
}

void AssemblySensitivity::validate(const ParametricQp& qp) const {
  auto check_slots = [&](const std::vector<SpMat>& slots, Eigen::Index rows,
                         Eigen::Index cols, const char* name) {
    if (slots.empty()) return;
    require_dims(static_cast<Eigen::Index>(slots.size()) == n_p,
                 std::string("sensitivity: wrong slot count for ") + name);
    for (const auto& s : slots) {
      require_dims(s.rows() == rows && s.cols() == cols,
                   std::string("sensitivity: slot shape mismatch for ") + name);
    }
  };
  check_slots(dQ, qp.n(), qp.n(), "dQ");
  check_slots(dF, qp.n_eq(), qp.n(), "dF");
  check_slots(dG, qp.n_in(), qp.n(), "dG");
  require_dims(dq.rows() == qp.n() && dq.cols() == n_p, "sensitivity: dq");
  require_dims(df.rows() == qp.n_eq() && df.cols() == n_p, "sensitivity: df");
  require_dims(dg.rows() == qp.n_in() && dg.cols() == n_p, "sensitivity: dg");
}

JpcSelection select_jpc(const Vec& z, Eigen::Index n_eq) {
  const Eigen::Index n_in = z.size() - n_eq;
  require_dims(n_in >= 0, "select_jpc: n_eq exceeds dual size");
  JpcSelection sel;
  sel.d = Vec::Ones(z.size());
  for (Eigen::Index i = 0; i < n_in; ++i) sel.d[i] = z[i] > 0.0 ? 1.0 : 0.0;
  return sel;
}

namespace {

// dA_j' z + dq_j + dQ_j x for every coordinate j (n x n_p).
Mat primal_sensitivity_rhs(const ParametricQp& qp,
                           const AssemblySensitivity& sens, const Vec& x,
                           const Vec& z) {
  Mat M = sens.dq;
  const Vec lambda = z.head(qp.n_in());
  const Vec mu = z.tail(qp.n_eq());
  for (Eigen::Index j = 0; j < sens.n_p; ++j) {
    if (!sens.dQ.empty() && sens.dQ[j].nonZeros() > 0) M.col(j) += sens.dQ[j] * x;
    if (!sens.dG.empty() && sens.dG[j].nonZeros() > 0)
      M.col(j) += sens.dG[j].transpose() * lambda;
    if (!sens.dF.empty() && sens.dF[j].nonZeros() > 0)
      M.col(j) += sens.dF[j].transpose() * mu;
  }
  return M;
}

}  // namespace

Mat dual_rhs(const ParametricQp& qp, const DualProblem& dp,
             const AssemblySensitivity& sens, const Vec& x, const Vec& z) {
  sens.validate(qp);
  const Eigen::Index n_in = qp.n_in();
  const Eigen::Index nz = dp.size();
  Mat rhs(nz, sens.n_p);
  if (nz == 0 || sens.n_p == 0) return rhs;
  const Mat M = primal_sensitivity_rhs(qp, sens, x, z);
  rhs = dp.factor->A() * dp.factor->solve(M);
  rhs.topRows(n_in) += sens.dg;
  rhs.bottomRows(qp.n_eq()) += sens.df;
  for (Eigen::Index j = 0; j < sens.n_p; ++j) {
    if (!sens.dG.empty() && sens.dG[j].nonZeros() > 0)
      rhs.col(j).head(n_in) -= sens.dG[j] * x;
    if (!sens.dF.empty() && sens.dF[j].nonZeros() > 0)
      rhs.col(j).tail(qp.n_eq()) -= sens.dF[j] * x;
  }
  return rhs;
}

DualJacobian dual_jacobian(const DualProblem& dp, const Vec& z, double gamma,
                           const Mat& rhs) {
  const Eigen::Index nz = dp.size();
  require_dims(z.size() == nz && rhs.rows() == nz,
               "dual_jacobian: dimension mismatch");
  DualJacobian out;
  out.Z = Mat::Zero(nz, rhs.cols());
  if (nz == 0 || rhs.cols() == 0) return out;

  const JpcSelection sel = select_jpc(z, dp.n_eq);
  IndexList free;
  for (Eigen::Index i = 0; i < nz; ++i) {
    if (sel.d[i] != 0.0) free.push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(free.size());
  if (k == 0) return out;

  // Selected rows of U Z = V read -gamma H_F. Z = -gamma rhs_F, and the
  // unselected rows force Z_N = 0.
  Mat U(k, k);
  Mat V(k, rhs.cols());
  for (Eigen::Index a = 0; a < k; ++a) {
    V.row(a) = -gamma * rhs.row(free[a]);
    for (Eigen::Index b = 0; b < k; ++b) U(a, b) = -gamma * dp.H(free[a], free[b]);
  }
  Mat ZF;
  Eigen::LLT<Mat> llt(-U);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-12) {
    ZF = -llt.solve(V);
  } else {
    out.degenerate = true;
    ZF = Eigen::CompleteOrthogonalDecomposition<Mat>(U).solve(V);
  }
  for (Eigen::Index a = 0; a < k; ++a) out.Z.row(free[a]) = ZF.row(a);
  return out;
}

SolutionJacobian solution_jacobian(const ParametricQp& qp,
                                   const DualProblem& dp,
                                   const AssemblySensitivity& sens,
                                   const Vec& z, const DualJacobian& Z,
                                   Eigen::Index n_state) {
  sens.validate(qp);
  require_dims(Z.Z.rows() == dp.size() && Z.Z.cols() == sens.n_p,
               "solution_jacobian: Z has wrong shape");
  require_dims(n_state >= 0 && n_state <= sens.n_p,
               "solution_jacobian: n_state out of range");
  SolutionJacobian out;
  out.n_state = n_state;
  out.degenerate = Z.degenerate;
  if (sens.n_p == 0) {
    out.Jx_p.resize(qp.n(), 0);
    return out;
  }
  const Vec x = recover_primal(qp, dp, z);
  Mat M = primal_sensitivity_rhs(qp, sens, x, z);
  if (dp.size() > 0) M -= dp.factor->A().transpose() * Z.Z;
  out.Jx_p = -dp.factor->solve(M);
  return out;
}

SolutionJacobian differentiate(const ParametricQp& qp, const DualProblem& dp,
                               const AssemblySensitivity& sens,
                               const QpSolution& sol, Eigen::Index n_state) {
  const Mat rhs = dual_rhs(qp, dp, sens, sol.x, sol.z);
  const DualJacobian Z = dual_jacobian(dp, sol.z, sol.gamma, rhs);
  return solution_jacobian(qp, dp, sens, sol.z, Z, n_state);
}

Mat kkt_oracle_jacobian(const ParametricQp& qp,
                        const AssemblySensitivity& sens, const Vec& x,
                        const Vec& z, double min_active_multiplier) {
  sens.validate(qp);
  const Eigen::Index n = qp.n();
  const Eigen::Index n_in = qp.n_in();
  const Eigen::Index n_eq = qp.n_eq();
  const double slack_tol = 1e-9 * (1.0 + (n_in ? qp.g.cwiseAbs().maxCoeff() : 0.0));

  IndexList act;
  for (Eigen::Index i = 0; i < n_in; ++i) {
    const double slack = qp.g[i] - qp.G.row(i).dot(x);
    if (z[i] > min_active_multiplier) {
      act.push_back(i);
    } else if (std::abs(slack) <= slack_tol) {
      throw Error(ErrorCode::SingularKkt,
                  "kkt_oracle_jacobian: weakly active constraint " +
                      std::to_string(i));
    }
  }
  const auto m = static_cast<Eigen::Index>(act.size()) + n_eq;
  Mat K = Mat::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = qp.Q;
  Mat As(m, n);
  Vec zs(m);
  for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(act.size()); ++a) {
    As.row(a) = qp.G.row(act[a]);
    zs[a] = z[act[a]];
  }
  if (n_eq > 0) {
    As.bottomRows(n_eq) = qp.F;
    zs.tail(n_eq) = z.tail(n_eq);
  }
  K.topRightCorner(n, m) = As.transpose();
  K.bottomLeftCorner(m, n) = As;

  Mat rhs = Mat::Zero(n + m, sens.n_p);
  for (Eigen::Index j = 0; j < sens.n_p; ++j) {
    Vec top = sens.dq.col(j);
    Vec bottom(m);
    for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(act.size()); ++a)
      bottom[a] = sens.dg(act[a], j);
    if (n_eq > 0) bottom.tail(n_eq) = sens.df.col(j);
    if (!sens.dQ.empty()) top += sens.dQ[j] * x;
    if (!sens.dG.empty()) {
      const Mat dG = Mat(sens.dG[j]);
      for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(act.size()); ++a) {
        top += dG.row(act[a]).transpose() * zs[a];
        bottom[a] -= dG.row(act[a]).dot(x);
      }
    }
    if (!sens.dF.empty() && n_eq > 0) {
      const Mat dF = Mat(sens.dF[j]);
      top += dF.transpose() * z.tail(n_eq);
      bottom.tail(n_eq) -= dF * x;
    }
    rhs.col(j).head(n) = -top;
    rhs.col(j).tail(m) = bottom;
  }
  Eigen::FullPivLU<Mat> lu(K);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::SingularKkt, "kkt_oracle_jacobian: KKT matrix singular");
  }
  return lu.solve(rhs).topRows(n);
}

}  // namespace mpctune
