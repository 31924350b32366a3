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

#include <gtest/gtest.h>

#include <cmath>

namespace mpctune {
namespace {

const Scenario& quad() {
  static const Scenario s = [] {
    QuadcopterOptions o;
    o.T = 5;
    return quadcopter(o);
  }();
  return s;
}

TEST(ThetaBox, DiagonalEntriesNonNegative) {
  const Box b = default_theta_box(2, 1, 7.0);
  // p_Q (2), p_R (1), L packed row-wise: L00, L10, L11.
  ASSERT_EQ(b.lower.size(), 6);
  EXPECT_EQ(b.lower[0], 0.0);
  EXPECT_EQ(b.lower[2], 0.0);
  EXPECT_EQ(b.lower[3], 0.0);
  EXPECT_EQ(b.lower[4], -7.0);
  EXPECT_EQ(b.lower[5], 0.0);
  EXPECT_TRUE((b.upper.array() == 7.0).all());
}

TEST(Scenarios, LtiShapes) {
  const Scenario a = scalar_lti();
  EXPECT_EQ(a.theta0.pack().size(), 3);
  EXPECT_EQ(a.T, 20);
  const Scenario d = double_integrator();
  EXPECT_EQ(d.theta0.pack().size(), 6);
  EXPECT_EQ(d.x0.size(), 2);
}

TEST(Scenarios, DoubleIntegratorMismatchScalesInputGain) {
  DoubleIntegratorOptions o;
  o.mismatch = 0.2;
  const Scenario s = double_integrator(o);
  const Vec x = Vec::Zero(2), u = Vec::Ones(1);
  const Vec plant = s.plant(x, u);
  const Vec model = s.mpc.model.A * x + s.mpc.model.B * u + s.mpc.model.c;
  EXPECT_NEAR(model[1], 0.8 * plant[1], 1e-15);
}

// A probe just outside the box leaves the velocity weight at eps, so the dual
// has lambda_max ~ 3e6 and its active-set polish once cycled on two
// dependent rows at rollout step 17.
TEST(Scenarios, DoubleIntegratorRolloutWithVanishingWeight) {
  DoubleIntegratorOptions o;
  o.mismatch = 0.2;
  o.theta0 = (Vec(6) << 0.1, 0.1, 3.0, 0.1, 0.0, 0.1).finished();
  const Scenario s = double_integrator(o);
  Vec theta(6);
  theta << 2.675789314636305, -3.3566828985852748e-06, 1.3526168393279536,
      0.24083205310075731, -0.35203863391098572, 0.086307781468409117;
  EXPECT_NO_THROW(evaluate(s, theta, false));
}

TEST(Scenarios, QuadcopterIdentifiedModelNearHoverLinearization) {
  const Scenario& s = quad();
  const LinearModel lin = hover_linearization(QuadcopterParams{}, s.mpc.x_ref);
  EXPECT_GT(s.mpc.model.fit_residual, 0.0);
  EXPECT_LT((s.mpc.model.A - lin.A).cwiseAbs().maxCoeff(), 0.05);
  const double b_scale = lin.B.cwiseAbs().maxCoeff();
  EXPECT_LT((s.mpc.model.B - lin.B).cwiseAbs().maxCoeff(), 0.05 * b_scale);
}

TEST(Scenarios, QuadcopterDareInitialisation) {
  const Scenario& s = quad();
  // 12 + 4 + 12*13/2.
  EXPECT_EQ(s.theta0.pack().size(), 94);
  const Mat P = s.theta0.P(0.0);
  const Mat Q = s.theta0.Q(0.0);
  const Mat R = s.theta0.R(0.0);
  EXPECT_NEAR(Q(0, 0), 1.0, 1e-5);
  EXPECT_NEAR(Q(6, 6), 0.1, 1e-5);
  EXPECT_NEAR(R(0, 0), 0.01, 1e-5);
  EXPECT_LT(dare_residual(s.mpc.model.A, s.mpc.model.B, s.objective.Qc, s.objective.Rc, P),
            1e-6 * P.norm());
}

TEST(Scenarios, QuadcopterEvaluationIsFinite) {
  const Scenario& s = quad();
  const Evaluation e = evaluate(s, s.theta0.pack(), true);
  EXPECT_TRUE(std::isfinite(e.C));
  EXPECT_GE(e.P, 0.0);
  EXPECT_EQ(e.d1.size(), 94);
  EXPECT_TRUE(e.d1.allFinite());
}

}  // namespace
}  // namespace mpctune
