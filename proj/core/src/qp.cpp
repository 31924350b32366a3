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

#include "mpctune/qp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mpctune {

ParametricQp ParametricQp::zeros(Eigen::Index n, Eigen::Index n_eq,
                                 Eigen::Index n_in) {
  return {Mat::Zero(n, n),    Vec::Zero(n),    Mat::Zero(n_eq, n),
          Vec::Zero(n_eq),    Mat::Zero(n_in, n), Vec::Zero(n_in)};
}

void ParametricQp::validate() const {
  const auto nn = n();
  require_dims(Q.cols() == nn, "QP: Q must be square");
  require_dims(q.size() == nn, "QP: q size must match Q");
  require_dims(F.cols() == nn || F.rows() == 0, "QP: F columns must match n");
  require_dims(f.size() == F.rows(), "QP: f size must match F rows");
  require_dims(G.cols() == nn || G.rows() == 0, "QP: G columns must match n");
  require_dims(g.size() == G.rows(), "QP: g size must match G rows");
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          ErrorCode::NotStronglyConvex, "QP: Q is not symmetric");
}

Mat ParametricQp::stacked_A() const {
  Mat A(n_in() + n_eq(), n());
  if (n_in() > 0) A.topRows(n_in()) = G;
  if (n_eq() > 0) A.bottomRows(n_eq()) = F;
  return A;
}

Vec ParametricQp::stacked_b() const {
  Vec b(n_in() + n_eq());
  b << g, f;
  return b;
}

QFactor::QFactor(const ParametricQp& qp) {
  const SpMat Qs = qp.Q.sparseView();
  llt_.compute(Qs);
  require(llt_.info() == Eigen::Success, ErrorCode::NotStronglyConvex,
          "QP: Cholesky factorization of Q failed (Q not positive definite)");
  A_ = qp.stacked_A().sparseView();
}

Mat QFactor::whitened_At() const {
  Mat At = Mat(A_.transpose());
  At = llt_.permutationP() * At;
  llt_.matrixL().solveInPlace(At);
  return At;
}

double DualProblem::objective(const Vec& z) const {
  if (z.size() == 0) return 0.0;
  return 0.5 * z.dot(H_sparse * z) + h.dot(z);
}

Vec DualProblem::gradient(const Vec& z) const { return H_sparse * z + h; }

DualProblem build_dual(const ParametricQp& qp) {
  qp.validate();
  DualProblem dp;
  dp.n_in = qp.n_in();
  dp.n_eq = qp.n_eq();
  dp.factor = std::make_shared<const QFactor>(qp);
  const SpMat& A = dp.factor->A();
  const Eigen::Index nz = dp.size();
  if (nz == 0) {
    dp.H.resize(0, 0);
    dp.h.resize(0);
    dp.H_sparse.resize(0, 0);
    return dp;
  }
  dp.W = dp.factor->whitened_At();
  dp.H.noalias() = dp.W.transpose() * dp.W;
  dp.H = 0.5 * (dp.H + dp.H.transpose()).eval();
  dp.h = A * dp.factor->solve(qp.q) + qp.stacked_b();
  dp.H_sparse = dp.H.sparseView(0.0);
  return dp;
}

Vec project_dual(const Vec& z, Eigen::Index n_in) {
  Vec p = z;
  if (n_in > 0) p.head(n_in) = p.head(n_in).cwiseMax(0.0);
  return p;
}

double fixed_point_residual(const DualProblem& dp, const Vec& z,
                            double gamma) {
  if (z.size() == 0) return 0.0;
  const Vec step = project_dual(z - gamma * dp.gradient(z), dp.n_in);
  return (z - step).cwiseAbs().maxCoeff();
}

double estimate_lambda_max(const DualProblem& dp, int iterations) {
  const Eigen::Index nz = dp.size();
  if (nz == 0) return 0.0;
  Vec v(nz);
  for (Eigen::Index i = 0; i < nz; ++i) {
    v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  }
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vec w = dp.H_sparse * v;
    lambda = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
  }
  return std::max(lambda, (dp.H_sparse * v).norm());
}

double default_gamma(const DualProblem& dp) {
  const double lambda = estimate_lambda_max(dp);
  if (!(lambda > 1e-300)) return 1.0;
  return 0.9 / lambda;
}

namespace {

// Relative threshold on the squared distance of a whitened constraint row
// from the span of the rows already kept, shared by the independence test
// and the curvature test.
constexpr double kDependentPivot = 1e-9;
constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon();

// Greedy selection of coordinates whose whitened rows are linearly
// independent (equivalently A_F Q^-1 A_F' stays positive definite), scanning
// `order` front to back. Gram-Schmidt with one reorthogonalization pass.
IndexList independent_subset(const Mat& W, const IndexList& order) {
  IndexList picked;
  const Eigen::Index n = W.rows();
  Mat U(n, std::min<Eigen::Index>(n, static_cast<Eigen::Index>(order.size())));
  Eigen::Index k = 0;
  for (const Eigen::Index i : order) {
    if (k == U.cols()) break;
    const double norm = W.col(i).norm();
    if (norm == 0.0) continue;
    Vec r = W.col(i) / norm;
    for (int pass = 0; pass < 2 && k > 0; ++pass)
      r -= U.leftCols(k) * (U.leftCols(k).transpose() * r);
    const double d = r.squaredNorm();
    if (d <= kDependentPivot) continue;
    U.col(k++) = r / std::sqrt(d);
    picked.push_back(i);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

// Square-root factor of H for duals assembled by hand without W.
Mat sqrt_factor(const Mat& H) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  return es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

// Active-set method on the bound-constrained dual, started from the sign
// pattern of a feasible z0. The working set W holds the coordinates allowed
// to move; it is kept linearly independent so H_WW stays positive definite.
// A dependent entering coordinate is handled with a zero-curvature step that
// pushes a blocking coordinate out. Returns nullopt if the dual is unbounded
// along such a step (primal infeasible) or the iteration budget runs out.
std::optional<Vec> refine(const DualProblem& dp, const Vec& z0) {
  const Eigen::Index nz = dp.size();
  const Eigen::Index n_in = dp.n_in;
  const double grad_tol = 1e-12 * (1.0 + dp.h.cwiseAbs().maxCoeff());
  const SpMat abs_H = dp.H_sparse.cwiseAbs();

  IndexList order;
  for (Eigen::Index i = n_in; i < nz; ++i) order.push_back(i);
  IndexList pos;
  for (Eigen::Index i = 0; i < n_in; ++i)
    if (z0[i] > 0.0) pos.push_back(i);
  std::stable_sort(pos.begin(), pos.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return z0[a] > z0[b]; });
  order.insert(order.end(), pos.begin(), pos.end());
  // Jacobi scaling D = diag(H)^-1/2 for the working-set solves.
  Vec scale(nz);
  for (Eigen::Index i = 0; i < nz; ++i) {
    const double hii = dp.H(i, i);
    scale[i] = hii > 0.0 ? 1.0 / std::sqrt(hii) : 0.0;
  }
  Mat fallback;
  const Mat& W = dp.W.cols() == nz ? dp.W : (fallback = sqrt_factor(dp.H));
  IndexList work = independent_subset(W, order);

  Vec z = Vec::Zero(nz);
  for (const Eigen::Index i : work) z[i] = z0[i];

  auto drop = [&](Eigen::Index j) {
    work.erase(std::find(work.begin(), work.end(), j));
    z[j] = 0.0;
  };

  const int max_rounds = static_cast<int>(3 * nz + 50);
  for (int round = 0; round < max_rounds; ++round) {
    const auto k = static_cast<Eigen::Index>(work.size());
    // Scaled working-set block S = D H_WW D = R'R from a QR of W_W D, so
    // H_WW^-1 v = D R^-1 R^-T D v without forming S.
    Mat WwD(W.rows(), k);
    Vec dw(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      dw[a] = scale[work[a]];
      WwD.col(a) = W.col(work[a]) * dw[a];
    }
    Mat R;
    if (k > 0) {
      if (k > W.rows()) return std::nullopt;
      Eigen::HouseholderQR<Mat> qr(WwD);
      R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
      if (R.diagonal().cwiseAbs().minCoeff() <= 1e-14) return std::nullopt;
    }
    auto solve_ww = [&](const Vec& v) -> Vec {
      Vec y = dw.cwiseProduct(v);
      R.transpose().triangularView<Eigen::Lower>().solveInPlace(y);
      R.triangularView<Eigen::Upper>().solveInPlace(y);
      return dw.cwiseProduct(y);
    };
    Vec hw(k);
    for (Eigen::Index a = 0; a < k; ++a) hw[a] = dp.h[work[a]];
    const Vec target = k > 0 ? solve_ww(-hw) : Vec();

    // Move toward the working-set minimizer until a multiplier hits zero.
    double step = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index i = work[a];
      const double p = target[a] - z[i];
      if (i < n_in && p < 0.0) {
        const double t = z[i] / -p;
        if (t < step) {
          step = t;
          blocking = i;
        }
      }
    }
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index i = work[a];
      z[i] = blocking < 0 ? target[a] : z[i] + step * (target[a] - z[i]);
    }
    if (blocking >= 0) {
      drop(blocking);
      continue;
    }

    const Vec grad = dp.gradient(z);
    // Rounding in H z scales with |H| |z|; below that a negative gradient is
    // noise, and pricing on it makes dependent rows swap forever.
    const Vec noise = abs_H * z.cwiseAbs();
    Eigen::Index enter = -1;
    double most = 0.0;
    for (Eigen::Index i = 0; i < n_in; ++i) {
      const double g = grad[i] + grad_tol + kRoundoff * noise[i];
      if (z[i] == 0.0 && g < 0.0 && grad[i] < most &&
          std::find(work.begin(), work.end(), i) == work.end()) {
        most = grad[i];
        enter = i;
      }
    }
    if (enter < 0) return z;

    Vec col(k);
    for (Eigen::Index a = 0; a < k; ++a) col[a] = dp.H(work[a], enter);
    const Vec w = k > 0 ? solve_ww(col) : Vec();
    // Squared distance of the entering row from the working-set span.
    Vec resid = W.col(enter);
    for (Eigen::Index a = 0; a < k; ++a) resid -= w[a] * W.col(work[a]);
    const double curvature = resid.squaredNorm();
    if (curvature > kDependentPivot * dp.H(enter, enter)) {
      work.push_back(enter);
      std::sort(work.begin(), work.end());
      continue;
    }
    // Zero curvature along d = (-w, 1): descend until a multiplier blocks.
    double t = kInf;
    blocking = -1;
    for (Eigen::Index a = 0; a < k; ++a) {
      const Eigen::Index i = work[a];
      if (i < n_in && w[a] > 0.0 && z[i] / w[a] < t) {
        t = z[i] / w[a];
        blocking = i;
      }
    }
    if (blocking < 0) return std::nullopt;
    for (Eigen::Index a = 0; a < k; ++a) z[work[a]] -= t * w[a];
    z[enter] = t;
    drop(blocking);
    work.push_back(enter);
    std::sort(work.begin(), work.end());
  }
  return std::nullopt;
}

}  // namespace

DualSolveResult solve_dual(const DualProblem& dp,
                           const DualSolveOptions& options) {
  const Eigen::Index nz = dp.size();
  DualSolveResult result;
  result.gamma = options.gamma > 0.0 ? options.gamma : default_gamma(dp);
  if (nz == 0) {
    result.z.resize(0);
    result.converged = true;
    return result;
  }
  const int max_iter =
      options.max_iter > 0 ? options.max_iter : static_cast<int>(200 * nz);
  double gamma = result.gamma;

  Vec z = Vec::Zero(nz);
  if (options.warm_start) {
    require_dims(options.warm_start->size() == nz,
                 "solve_dual: warm start has wrong size");
    z = project_dual(*options.warm_start, dp.n_in);
  }

  auto try_polish = [&](Vec& current) {
    auto better = refine(dp, current);
    if (better && dp.objective(*better) <=
                      dp.objective(current) +
                          1e-12 * std::max(1.0, std::abs(dp.objective(current)))) {
      current = *better;
      const double res = fixed_point_residual(dp, current, gamma);
      result.polished = true;
      return res;
    }
    return fixed_point_residual(dp, current, gamma);
  };

  double residual = options.polish && options.warm_start
                        ? try_polish(z)
                        : fixed_point_residual(dp, z, gamma);
  Vec Hz = dp.H_sparse * z;
  double obj = 0.5 * z.dot(Hz) + dp.h.dot(z);
  int it = 0;
  while (residual > options.tol && it < max_iter) {
    ++it;
    Vec next = project_dual(z - gamma * (Hz + dp.h), dp.n_in);
    Vec Hnext = dp.H_sparse * next;
    const double next_obj = 0.5 * next.dot(Hnext) + dp.h.dot(next);
    if (next_obj > obj + 1e-12 * std::max(1.0, std::abs(obj))) {
      // Power iteration underestimated lambda_max; shrink the step.
      gamma *= 0.5;
      continue;
    }
    residual = (next - z).cwiseAbs().maxCoeff();
    const bool moved = residual > 0.0;
    result.polished = false;
    z = std::move(next);
    Hz = std::move(Hnext);
    obj = next_obj;
    if (moved && options.polish && options.polish_interval > 0 &&
        it % options.polish_interval == 0 && residual > options.tol) {
      residual = try_polish(z);
      Hz = dp.H_sparse * z;
      obj = 0.5 * z.dot(Hz) + dp.h.dot(z);
    }
  }
  // residual above is measured at the previous iterate; report it at z.
  result.residual = fixed_point_residual(dp, z, gamma);
  if (options.polish && !result.polished && result.residual <= options.tol &&
      result.residual > 0.0) {
    // Snap to the exact minimizer on the identified active set.
    Vec snapped = z;
    const double res = try_polish(snapped);
    if (res <= result.residual) {
      z = std::move(snapped);
      result.residual = res;
    } else {
      result.polished = false;
    }
  }
  result.converged = result.residual <= options.tol;
  result.iterations = it;
  result.gamma = gamma;
  result.z = std::move(z);
  return result;
}

Vec recover_primal(const ParametricQp& qp, const DualProblem& dp,
                   const Vec& z) {
  require_dims(z.size() == dp.size(), "recover_primal: dual size mismatch");
  if (z.size() == 0) return -dp.factor->solve(qp.q);
  const Vec rhs = dp.factor->A().transpose() * z + qp.q;
  return -dp.factor->solve(rhs);
}

Vec recover_primal(const ParametricQp& qp, const Vec& z) {
  qp.validate();
  require_dims(z.size() == qp.n_in() + qp.n_eq(),
               "recover_primal: dual size mismatch");
  const QFactor factor(qp);
  if (z.size() == 0) return -factor.solve(qp.q);
  const Vec rhs = factor.A().transpose() * z + qp.q;
  return -factor.solve(rhs);
}

bool check_licq(const ParametricQp& qp, const IndexList& active_set,
                double threshold) {
  const auto n_act = static_cast<Eigen::Index>(active_set.size());
  const Eigen::Index rows = n_act + qp.n_eq();
  if (rows == 0) return true;
  if (rows > qp.n()) return false;
  Mat M(rows, qp.n());
  for (Eigen::Index a = 0; a < n_act; ++a) {
    require_dims(active_set[a] >= 0 && active_set[a] < qp.n_in(),
                 "check_licq: active index out of range");
    M.row(a) = qp.G.row(active_set[a]);
  }
  if (qp.n_eq() > 0) M.bottomRows(qp.n_eq()) = qp.F;
  // Row rank of M equals the column rank of M'.
  Eigen::ColPivHouseholderQR<Mat> qr(M.transpose());
  qr.setThreshold(threshold);
  return qr.rank() == rows;
}

IndexList active_set(const Vec& z, Eigen::Index n_in, double tol_act) {
  IndexList act;
  for (Eigen::Index i = 0; i < n_in; ++i) {
    if (z[i] > tol_act) act.push_back(i);
  }
  return act;
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Converged: return "Converged";
    case QpStatus::MaxIter: return "MaxIter";
    case QpStatus::LicqViolated: return "LicqViolated";
  }
  return "Unknown";
}

QpSolution solve_qp(const ParametricQp& qp, const DualProblem& dp,
                    const QpSolveOptions& options) {
  const DualSolveResult dual = solve_dual(dp, options.dual);
  QpSolution sol;
  sol.z = dual.z;
  sol.x = recover_primal(qp, dp, dual.z);
  sol.iterations = dual.iterations;
  sol.gamma = dual.gamma;
  sol.residual = dual.residual;
  sol.active_set = active_set(sol.z, qp.n_in(), options.tol_act);
  if (!dual.converged) {
    sol.status = QpStatus::MaxIter;
  } else if (options.check_licq && !check_licq(qp, sol.active_set)) {
    sol.status = QpStatus::LicqViolated;
  } else {
    sol.status = QpStatus::Converged;
  }
  return sol;
}

QpSolution solve_qp(const ParametricQp& qp, const QpSolveOptions& options) {
  return solve_qp(qp, build_dual(qp), options);
}

double KktResiduals::max() const {
  return std::max({stationarity, equality, inequality, complementarity,
                   dual_feasibility});
}

KktResiduals kkt_residuals(const ParametricQp& qp, const Vec& x,
                           const Vec& z) {
  KktResiduals r;
  const Eigen::Index n_in = qp.n_in();
  const Eigen::Index n_eq = qp.n_eq();
  const Vec lambda = z.head(n_in);
  const Vec mu = z.tail(n_eq);
  Vec stat = qp.Q * x + qp.q;
  if (n_in > 0) stat += qp.G.transpose() * lambda;
  if (n_eq > 0) stat += qp.F.transpose() * mu;
  r.stationarity = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
  if (n_eq > 0) r.equality = (qp.F * x - qp.f).cwiseAbs().maxCoeff();
  if (n_in > 0) {
    const Vec slack = qp.G * x - qp.g;
    r.inequality = std::max(0.0, slack.maxCoeff());
    r.complementarity = lambda.cwiseProduct(slack).cwiseAbs().maxCoeff();
    r.dual_feasibility = std::max(0.0, -lambda.minCoeff());
  }
  return r;
}

}  // namespace mpctune
