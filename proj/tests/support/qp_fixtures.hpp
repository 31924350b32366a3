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

// Test-only fixtures: random parametric QPs and an active-set enumeration
// oracle that shares no code with the dual solver.

#include "mpctune/qp.hpp"
#include "mpctune/qp_diff.hpp"

#include <Eigen/LU>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace mpctune::testing {

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n) {
  return random_matrix(rng, n, 1);
}

/// QP blocks affine in a parameter p: block(p) = block0 + sum_j p_j dblock_j.
struct AffineQpFamily {
  ParametricQp base;
  std::vector<Mat> dQ, dF, dG;
  Mat dq, df, dg;
  Eigen::Index n_p = 0;

  ParametricQp at(const Vec& p) const {
    ParametricQp qp = base;
    for (Eigen::Index j = 0; j < n_p; ++j) {
      qp.Q += p[j] * dQ[j];
      qp.F += p[j] * dF[j];
      qp.G += p[j] * dG[j];
    }
    qp.q += dq * p;
    qp.f += df * p;
    qp.g += dg * p;
    return qp;
  }

  /// Sensitivity at any p (the family is affine).
  AssemblySensitivity sensitivity() const {
    AssemblySensitivity s;
    s.n_p = n_p;
    for (Eigen::Index j = 0; j < n_p; ++j) {
      s.dQ.push_back(dQ[j].sparseView());
      s.dF.push_back(dF[j].sparseView());
      s.dG.push_back(dG[j].sparseView());
    }
    s.dq = dq;
    s.df = df;
    s.dg = dg;
    return s;
  }
};

struct RandomQpDims {
  Eigen::Index n, n_eq, n_in, n_p;
};

inline RandomQpDims random_dims(std::mt19937_64& rng, Eigen::Index max_n = 20,
                                Eigen::Index max_in = 12,
                                Eigen::Index max_eq = 4, Eigen::Index n_p = 3) {
  std::uniform_int_distribution<Eigen::Index> dn(2, max_n);
  const Eigen::Index n = dn(rng);
  std::uniform_int_distribution<Eigen::Index> de(0, std::min(max_eq, n - 1));
  std::uniform_int_distribution<Eigen::Index> di(0, max_in);
  return {n, de(rng), di(rng), n_p};
}

/// Strictly convex (Q = M'M + I), feasible by construction around a random
/// point, with small parameter perturbations on every block.
inline AffineQpFamily random_qp_family(std::mt19937_64& rng,
                                       const RandomQpDims& d,
                                       double param_scale = 0.1) {
  AffineQpFamily fam;
  fam.n_p = d.n_p;
  const Mat M = random_matrix(rng, d.n, d.n);
  fam.base.Q = M.transpose() * M + Mat::Identity(d.n, d.n);
  fam.base.q = 3.0 * random_vector(rng, d.n);
  const Vec x_feas = random_vector(rng, d.n);
  fam.base.F = random_matrix(rng, d.n_eq, d.n);
  fam.base.f = fam.base.F * x_feas;
  fam.base.G = random_matrix(rng, d.n_in, d.n);
  std::uniform_real_distribution<double> slack(0.0, 1.0);
  fam.base.g = fam.base.G * x_feas;
  for (Eigen::Index i = 0; i < d.n_in; ++i) fam.base.g[i] += slack(rng);
  for (Eigen::Index j = 0; j < d.n_p; ++j) {
    Mat S = random_matrix(rng, d.n, d.n);
    fam.dQ.push_back(param_scale * 0.5 * (S + S.transpose()));
    fam.dF.push_back(param_scale * random_matrix(rng, d.n_eq, d.n));
    fam.dG.push_back(param_scale * random_matrix(rng, d.n_in, d.n));
  }
  fam.dq = random_matrix(rng, d.n, d.n_p);
  fam.df = random_matrix(rng, d.n_eq, d.n_p);
  fam.dg = random_matrix(rng, d.n_in, d.n_p);
  return fam;
}

struct OracleSolution {
  Vec x;
  Vec z;
  std::vector<Eigen::Index> active;
};

/// Enumerate all active sets (n_in small), solve each KKT system, keep the
/// one that is primal and dual feasible.
inline std::optional<OracleSolution> brute_force_qp(const ParametricQp& qp,
                                                    double tol = 1e-9) {
  const Eigen::Index n = qp.n();
  const Eigen::Index n_in = qp.n_in();
  const Eigen::Index n_eq = qp.n_eq();
  std::optional<OracleSolution> best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n_in); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < n_in; ++i)
      if (mask & (std::uint64_t{1} << i)) act.push_back(i);
    const Eigen::Index m = static_cast<Eigen::Index>(act.size()) + n_eq;
    if (m > n) continue;
    Mat K = Mat::Zero(n + m, n + m);
    Vec rhs(n + m);
    K.topLeftCorner(n, n) = qp.Q;
    rhs.head(n) = -qp.q;
    for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(act.size()); ++a) {
      K.block(n + a, 0, 1, n) = qp.G.row(act[a]);
      K.block(0, n + a, n, 1) = qp.G.row(act[a]).transpose();
      rhs[n + a] = qp.g[act[a]];
    }
    for (Eigen::Index e = 0; e < n_eq; ++e) {
      const Eigen::Index r = n + static_cast<Eigen::Index>(act.size()) + e;
      K.block(r, 0, 1, n) = qp.F.row(e);
      K.block(0, r, n, 1) = qp.F.row(e).transpose();
      rhs[r] = qp.f[e];
    }
    Eigen::FullPivLU<Mat> lu(K);
    if (!lu.isInvertible()) continue;
    const Vec sol = lu.solve(rhs);
    const Vec x = sol.head(n);
    bool ok = true;
    for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(act.size()); ++a)
      ok &= sol[n + a] >= -tol;
    if (n_in > 0) ok &= ((qp.G * x - qp.g).array() <= tol).all();
    if (!ok) continue;
    OracleSolution o;
    o.x = x;
    o.z = Vec::Zero(n_in + n_eq);
    for (Eigen::Index a = 0; a < static_cast<Eigen::Index>(act.size()); ++a)
      o.z[act[a]] = sol[n + a];
    o.z.tail(n_eq) = sol.tail(n_eq);
    o.active = act;
    if (!best) best = o;
  }
  return best;
}

/// Central finite differences of the full solve along each parameter axis.
struct FdResult {
  Mat J;
  /// Active set identical at p, p + eps e_j and p - eps e_j for every j.
  std::vector<bool> stable;
};

inline FdResult fd_solution_jacobian(const AffineQpFamily& fam, const Vec& p,
                                     double eps = 1e-6) {
  const ParametricQp qp0 = fam.at(p);
  const QpSolution s0 = solve_qp(qp0);
  FdResult r;
  r.J.resize(qp0.n(), fam.n_p);
  for (Eigen::Index j = 0; j < fam.n_p; ++j) {
    Vec dp = Vec::Zero(fam.n_p);
    dp[j] = eps;
    const QpSolution sp = solve_qp(fam.at(p + dp));
    const QpSolution sm = solve_qp(fam.at(p - dp));
    r.J.col(j) = (sp.x - sm.x) / (2.0 * eps);
    r.stable.push_back(sp.active_set == s0.active_set &&
                       sm.active_set == s0.active_set);
  }
  return r;
}

inline double rel_err(const Mat& a, const Mat& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace mpctune::testing
