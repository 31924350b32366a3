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

#include <gtest/gtest.h>

#include <Eigen/LU>

#include "support/qp_fixtures.hpp"

namespace mpctune {
namespace {

using testing::AffineQpFamily;

// Literal U = J(I - gamma H) - I, V = -gamma J rhs, Z = U^-1 V.
Mat full_formula_Z(const DualProblem& dp, const Vec& z, double gamma,
                   const Mat& rhs) {
  const Eigen::Index nz = dp.size();
  const Mat J = select_jpc(z, dp.n_eq).d.asDiagonal();
  const Mat I = Mat::Identity(nz, nz);
  const Mat U = J * (I - gamma * dp.H) - I;
  const Mat V = -gamma * J * rhs;
  return U.fullPivLu().solve(V);
}

// min 1/2 x^2  s.t. x >= p, written as -x <= -p.
AffineQpFamily scalar_bound_family() {
  AffineQpFamily fam;
  fam.n_p = 1;
  fam.base = ParametricQp::zeros(1, 0, 1);
  fam.base.Q(0, 0) = 1.0;
  fam.base.G(0, 0) = -1.0;
  fam.dQ = {Mat::Zero(1, 1)};
  fam.dF = {Mat::Zero(0, 1)};
  fam.dG = {Mat::Zero(1, 1)};
  fam.dq = Mat::Zero(1, 1);
  fam.df = Mat::Zero(0, 1);
  fam.dg = Mat::Constant(1, 1, -1.0);
  return fam;
}

TEST(SelectJpc, MixedSigns) {
  Vec z(4);
  z << 2.0, 0.0, 0.5, -3.0;
  const auto sel = select_jpc(z, 1);
  EXPECT_EQ(sel.d, (Vec(4) << 1, 0, 1, 1).finished());
}

TEST(SelectJpc, AllInactive) {
  const auto sel = select_jpc(Vec::Zero(2), 0);
  EXPECT_EQ(sel.d, Vec::Zero(2));
}

TEST(SelectJpc, EqualityOnly) {
  Vec z(3);
  z << 0.0, -1.0, 4.0;
  EXPECT_EQ(select_jpc(z, 3).d, Vec::Ones(3));
}

TEST(SelectJpc, InvariantToPositiveRescaling) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    Vec z = testing::random_vector(rng, 8);
    for (Eigen::Index i = 0; i < 6; ++i) z[i] = u(rng) < 0.4 ? 0.0 : std::abs(z[i]);
    const double scale = 1e-3 + 1e3 * u(rng);
    EXPECT_EQ(select_jpc(z, 2).d, select_jpc(scale * z, 2).d);
  }
}

TEST(DualJacobian, ScalarActiveHandExample) {
  DualProblem dp;
  dp.H = Mat::Constant(1, 1, 1.0);
  dp.h = Vec::Constant(1, -1.0);
  dp.n_in = 1;
  dp.H_sparse = dp.H.sparseView();
  const auto Z = dual_jacobian(dp, Vec::Constant(1, 1.0), 0.5, Mat::Constant(1, 1, 1.0));
  EXPECT_FALSE(Z.degenerate);
  EXPECT_NEAR(Z.Z(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(full_formula_Z(dp, Vec::Constant(1, 1.0), 0.5, Mat::Constant(1, 1, 1.0))(0, 0),
              1.0, 1e-15);
  // Z is the negated dual sensitivity: lambda(p) = 1 - p here.
  auto lam = [](double p) {
    DualProblem d;
    d.H = Mat::Constant(1, 1, 1.0);
    d.h = Vec::Constant(1, -1.0 + p);
    d.n_in = 1;
    d.H_sparse = d.H.sparseView();
    return solve_dual(d).z[0];
  };
  const double fd = (lam(1e-6) - lam(-1e-6)) / 2e-6;
  EXPECT_NEAR(-Z.Z(0, 0), fd, 1e-8);
}

TEST(DualJacobian, InactiveDualsAreLocallyConstant) {
  DualProblem dp;
  dp.H = Mat::Constant(1, 1, 1.0);
  dp.h = Vec::Constant(1, 1.0);
  dp.n_in = 1;
  dp.H_sparse = dp.H.sparseView();
  const auto Z = dual_jacobian(dp, Vec::Zero(1), 0.5, Mat::Constant(1, 1, 3.0));
  EXPECT_EQ(Z.Z(0, 0), 0.0);
}

TEST(DualJacobian, NoParametersGivesEmptyMatrix) {
  DualProblem dp;
  dp.H = Mat::Constant(1, 1, 1.0);
  dp.h = Vec::Constant(1, -1.0);
  dp.n_in = 1;
  dp.H_sparse = dp.H.sparseView();
  const auto Z = dual_jacobian(dp, Vec::Constant(1, 1.0), 0.5, Mat(1, 0));
  EXPECT_EQ(Z.Z.rows(), 1);
  EXPECT_EQ(Z.Z.cols(), 0);
}

TEST(DualJacobian, ReducedSolveMatchesLiteralFormula) {
  std::mt19937_64 rng(17);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const auto d = testing::random_dims(rng, 12, 10, 3);
    const auto fam = testing::random_qp_family(rng, d);
    const ParametricQp& qp = fam.base;
    const DualProblem dp = build_dual(qp);
    const QpSolution sol = solve_qp(qp, dp);
    if (sol.status != QpStatus::Converged || dp.size() == 0) continue;
    const auto sens = fam.sensitivity();
    const Mat rhs = dual_rhs(qp, dp, sens, sol.x, sol.z);
    const auto Z = dual_jacobian(dp, sol.z, sol.gamma, rhs);
    const Mat Zref = full_formula_Z(dp, sol.z, sol.gamma, rhs);
    EXPECT_LT(testing::rel_err(Z.Z, Zref), 1e-8) << "trial " << t;
    ++checked;
  }
  EXPECT_GT(checked, 25);
}

TEST(DualJacobian, DependentActiveRowsFlagDegenerate) {
  // Two identical active rows: H_FF is singular.
  DualProblem dp;
  dp.H = Mat::Ones(2, 2);
  dp.h = Vec::Constant(2, -1.0);
  dp.n_in = 2;
  dp.H_sparse = dp.H.sparseView();
  Vec z(2);
  z << 0.5, 0.5;
  const auto Z = dual_jacobian(dp, z, 0.4, Mat::Ones(2, 1));
  EXPECT_TRUE(Z.degenerate);
  EXPECT_TRUE(Z.Z.allFinite());
}

TEST(SolutionJacobian, ScalarBoundFollowsParameter) {
  const auto fam = scalar_bound_family();
  const Vec p = Vec::Constant(1, 0.5);
  const ParametricQp qp = fam.at(p);
  const DualProblem dp = build_dual(qp);
  const QpSolution sol = solve_qp(qp, dp);
  EXPECT_NEAR(sol.x[0], 0.5, 1e-12);
  const auto sens = fam.sensitivity();
  const auto J = differentiate(qp, dp, sens, sol);
  EXPECT_NEAR(J.Jx_p(0, 0), 1.0, 1e-12);
  const auto fd = testing::fd_solution_jacobian(fam, p);
  EXPECT_NEAR(J.Jx_p(0, 0), fd.J(0, 0), 1e-8);
  EXPECT_NEAR(kkt_oracle_jacobian(qp, sens, sol.x, sol.z)(0, 0), 1.0, 1e-8);
}

TEST(SolutionJacobian, UnconstrainedIsNegativeInverseHessian) {
  AffineQpFamily fam;
  fam.n_p = 3;
  fam.base = ParametricQp::zeros(3, 0, 0);
  fam.base.Q << 4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0;
  for (int j = 0; j < 3; ++j) {
    fam.dQ.push_back(Mat::Zero(3, 3));
    fam.dF.push_back(Mat::Zero(0, 3));
    fam.dG.push_back(Mat::Zero(0, 3));
  }
  fam.dq = Mat::Identity(3, 3);
  fam.df = Mat::Zero(0, 3);
  fam.dg = Mat::Zero(0, 3);
  const ParametricQp qp = fam.base;
  const DualProblem dp = build_dual(qp);
  const QpSolution sol = solve_qp(qp, dp);
  const auto sens = fam.sensitivity();
  const auto J = differentiate(qp, dp, sens, sol);
  const Mat expected = -qp.Q.inverse();
  EXPECT_LT((J.Jx_p - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((kkt_oracle_jacobian(qp, sens, sol.x, sol.z) - expected).cwiseAbs().maxCoeff(),
            1e-8);
}

TEST(SolutionJacobian, InactiveConstraintMatchesUnconstrained) {
  AffineQpFamily fam;
  fam.n_p = 2;
  fam.base = ParametricQp::zeros(2, 0, 1);
  fam.base.Q << 2.0, 0.3, 0.3, 1.0;
  fam.base.G << 1.0, 1.0;
  fam.base.g << 10.0;
  for (int j = 0; j < 2; ++j) {
    fam.dQ.push_back(Mat::Zero(2, 2));
    fam.dF.push_back(Mat::Zero(0, 2));
    fam.dG.push_back(Mat::Zero(1, 2));
  }
  fam.dq = Mat::Identity(2, 2);
  fam.df = Mat::Zero(0, 2);
  fam.dg = Mat::Zero(1, 2);
  const ParametricQp qp = fam.base;
  const DualProblem dp = build_dual(qp);
  const QpSolution sol = solve_qp(qp, dp);
  EXPECT_EQ(sol.z[0], 0.0);
  const auto sens = fam.sensitivity();
  const auto J = differentiate(qp, dp, sens, sol);
  EXPECT_LT((J.Jx_p + qp.Q.inverse()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((kkt_oracle_jacobian(qp, sens, sol.x, sol.z) - J.Jx_p).cwiseAbs().maxCoeff(),
            1e-8);
}

TEST(SolutionJacobian, ZeroSensitivitySlotsGiveZeroColumns) {
  std::mt19937_64 rng(23);
  auto fam = testing::random_qp_family(rng, {8, 2, 6, 3});
  fam.dQ[1].setZero();
  fam.dF[1].setZero();
  fam.dG[1].setZero();
  fam.dq.col(1).setZero();
  fam.df.col(1).setZero();
  fam.dg.col(1).setZero();
  const ParametricQp& qp = fam.base;
  const DualProblem dp = build_dual(qp);
  const QpSolution sol = solve_qp(qp, dp);
  const auto J = differentiate(qp, dp, fam.sensitivity(), sol);
  for (Eigen::Index i = 0; i < J.Jx_p.rows(); ++i) EXPECT_EQ(J.Jx_p(i, 1), 0.0);
}

TEST(SolutionJacobian, PartitionViews) {
  std::mt19937_64 rng(4);
  const auto fam = testing::random_qp_family(rng, {6, 1, 3, 5});
  const ParametricQp& qp = fam.base;
  const DualProblem dp = build_dual(qp);
  const QpSolution sol = solve_qp(qp, dp);
  const auto J = differentiate(qp, dp, fam.sensitivity(), sol, 2);
  EXPECT_EQ(J.state().cols(), 2);
  EXPECT_EQ(J.theta().cols(), 3);
  EXPECT_EQ(Mat(J.theta()), Mat(J.Jx_p.rightCols(3)));
}

TEST(KktOracle, RandomQpAgreesWithDualRoute) {
  std::mt19937_64 rng(31);
  int checked = 0;
  for (int t = 0; t < 60 && checked < 20; ++t) {
    const auto fam = testing::random_qp_family(rng, {5, 1, 4, 3});
    const ParametricQp& qp = fam.base;
    const DualProblem dp = build_dual(qp);
    const QpSolution sol = solve_qp(qp, dp);
    const auto sens = fam.sensitivity();
    Mat oracle;
    try {
      oracle = kkt_oracle_jacobian(qp, sens, sol.x, sol.z);
    } catch (const Error&) {
      continue;
    }
    const auto J = differentiate(qp, dp, sens, sol);
    EXPECT_LT(testing::rel_err(J.Jx_p, oracle), 1e-6);
    ++checked;
  }
  EXPECT_GE(checked, 20);
}

TEST(KktOracle, WeaklyActiveConstraintThrows) {
  // min 1/2 x^2 s.t. x <= 0: the unconstrained minimizer sits on the bound.
  ParametricQp qp = ParametricQp::zeros(1, 0, 1);
  qp.Q(0, 0) = 1.0;
  qp.G(0, 0) = 1.0;
  auto sens = AssemblySensitivity::zeros(qp, 1);
  sens.dg(0, 0) = 1.0;
  const QpSolution sol = solve_qp(qp);
  try {
    kkt_oracle_jacobian(qp, sens, sol.x, sol.z);
    FAIL() << "expected SingularKkt";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularKkt);
  }
  // The dual route still returns the sign(0) = 0 selection.
  const DualProblem dp = build_dual(qp);
  EXPECT_EQ(differentiate(qp, dp, sens, sol).Jx_p(0, 0), 0.0);
}

TEST(SolutionJacobian, MatchesFiniteDifferencesOnStableActiveSets) {
  std::mt19937_64 rng(77);
  int coords = 0;
  int good = 0;
  for (int t = 0; t < 40; ++t) {
    const auto d = testing::random_dims(rng, 15, 10, 3);
    const auto fam = testing::random_qp_family(rng, d);
    const Vec p = Vec::Zero(fam.n_p);
    const ParametricQp qp = fam.at(p);
    const DualProblem dp = build_dual(qp);
    const QpSolution sol = solve_qp(qp, dp);
    ASSERT_EQ(sol.status, QpStatus::Converged);
    const auto J = differentiate(qp, dp, fam.sensitivity(), sol);
    const auto fd = testing::fd_solution_jacobian(fam, p);
    for (Eigen::Index j = 0; j < fam.n_p; ++j) {
      if (!fd.stable[j]) continue;
      ++coords;
      const double err = (J.Jx_p.col(j) - fd.J.col(j)).norm() /
                         std::max(fd.J.col(j).norm(), 1e-8);
      good += err <= 1e-4;
    }
  }
  EXPECT_GT(coords, 60);
  EXPECT_EQ(good, coords);
}

}  // namespace
}  // namespace mpctune
