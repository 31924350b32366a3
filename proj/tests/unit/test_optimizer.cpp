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

#include "mpctune/optimizer.hpp"
#include "mpctune/scenarios.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace mpctune {
namespace {

bool mentions(const ScheduleReport& r, const std::string& s) {
  for (const auto& v : r.violations)
    if (v.find(s) != std::string::npos) return true;
  return false;
}

Box unit_box(int n) { return {Vec::Zero(n), Vec::Ones(n)}; }

TEST(Schedule, ClosedForms) {
  const Schedule a = Schedule::power_log_law(5e-5, 0.75);
  for (long long k = 0; k < 500; ++k) {
    const double expect = 5e-5 * std::log(k + 2.0) / std::pow(k + 1.0, 0.75);
    EXPECT_NEAR(a.at(k), expect, 1e-12 * expect);
  }
  const Schedule e = Schedule::power_law(1.0, 0.5);
  for (long long k = 0; k < 500; ++k) EXPECT_NEAR(e.at(k), std::pow(k + 1.0, -0.5), 1e-12);
  EXPECT_EQ(Schedule::constant(0.3).at(99), 0.3);
  const Schedule c = Schedule::custom({3, 2, 1});
  EXPECT_EQ(c.at(0), 3);
  EXPECT_EQ(c.at(2), 1);
  EXPECT_EQ(c.at(10), 1);
}

TEST(ValidateSchedule, PowerLawPairIsValid) {
  const auto r = validate_schedule(Schedule::power_law(1, 0.75), Schedule::power_law(1, 0.5));
  EXPECT_TRUE(r.valid) << r.message();
  EXPECT_TRUE(r.summability_verified);
}

TEST(ValidateSchedule, LoggedStepWithDecayingEta) {
  for (double g : {0.5, 0.75, 1.0}) {
    const auto r = validate_schedule(Schedule::power_log_law(5e-5, 0.75), Schedule::power_law(1, g));
    EXPECT_TRUE(r.valid) << g << ": " << r.message();
  }
  // Exponents summing to one sit on the divergent boundary.
  const auto r = validate_schedule(Schedule::power_log_law(5e-5, 0.75), Schedule::power_law(1, 0.25));
  EXPECT_FALSE(r.valid);
}

TEST(ValidateSchedule, SquareSummabilityViolation) {
  const auto r = validate_schedule(Schedule::power_law(1, 0.4), Schedule::constant(0.0));
  EXPECT_FALSE(r.valid);
  EXPECT_TRUE(mentions(r, "alpha_k^2"));
}

TEST(ValidateSchedule, ConvergentStepViolation) {
  const auto r = validate_schedule(Schedule::power_law(1, 1.5), Schedule::constant(0.0));
  EXPECT_FALSE(r.valid);
  EXPECT_TRUE(mentions(r, "sum of alpha_k converges"));
  EXPECT_FALSE(validate_schedule(Schedule::constant(1e-3), Schedule::constant(0.0)).valid);
}

TEST(ValidateSchedule, ConstantEtaOneViolation) {
  const auto r = validate_schedule(Schedule::power_law(1, 0.75), Schedule::constant(1.0));
  EXPECT_FALSE(r.valid);
  EXPECT_TRUE(mentions(r, "eta_k alpha_k"));
}

TEST(ValidateSchedule, RangeViolations) {
  EXPECT_TRUE(mentions(validate_schedule(Schedule::power_law(0, 0.75), Schedule::constant(0)),
                       "positive"));
  EXPECT_TRUE(mentions(validate_schedule(Schedule::power_law(1, 0.75), Schedule::constant(1.5)),
                       "[0, 1]"));
  EXPECT_TRUE(mentions(validate_schedule(Schedule::power_law(1, 0.75), Schedule::power_law(2, 1)),
                       "[0, 1]"));
}

TEST(ValidateSchedule, ZeroEtaIsValid) {
  EXPECT_TRUE(validate_schedule(Schedule::power_law(1, 0.75), Schedule::constant(0)).valid);
}

TEST(ValidateSchedule, CustomTablesOnlyRangeChecked) {
  auto r = validate_schedule(Schedule::custom({1, 0.5}), Schedule::custom({0.5, 0.1}));
  EXPECT_TRUE(r.valid);
  EXPECT_FALSE(r.summability_verified);
  ASSERT_EQ(r.notes.size(), 1u);
  EXPECT_NE(r.notes[0].find("summability unverifiable"), std::string::npos);
  r = validate_schedule(Schedule::custom({1, -0.5}), Schedule::custom({2.0}));
  EXPECT_FALSE(r.valid);
  EXPECT_EQ(r.violations.size(), 2u);
}

TEST(Step, ClampExample) {
  const Vec th = (Vec(2) << 3.0, -1.0).finished();
  const Vec z = Vec::Zero(2);
  const Vec next = step(0, th, z, z, Schedule::constant(0.1), Schedule::constant(0.5), unit_box(2));
  EXPECT_EQ(next, (Vec(2) << 1.0, 0.0).finished());
}

TEST(Step, PureBranches) {
  const Vec th = Vec::Constant(2, 0.5);
  const Vec d1 = (Vec(2) << 1.0, 0.0).finished();
  const Vec d2 = (Vec(2) << 0.0, 1.0).finished();
  const Schedule a = Schedule::constant(0.1);
  EXPECT_EQ(step(0, th, d1, d2, a, Schedule::constant(1.0), unit_box(2)),
            (Vec(2) << 0.4, 0.5).finished());
  EXPECT_EQ(step(0, th, d1, d2, a, Schedule::constant(0.0), unit_box(2)),
            (Vec(2) << 0.5, 0.4).finished());
}

TEST(Step, NonFiniteDirection) {
  const Vec th = Vec::Zero(2);
  const Vec bad = (Vec(2) << 0.0, std::nan("")).finished();
  try {
    step(0, th, bad, Vec::Zero(2), Schedule::constant(1), Schedule::constant(0.5), unit_box(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteDirection);
  }
  // A dropped branch may be non-finite.
  EXPECT_NO_THROW(step(0, th, bad, Vec::Zero(2), Schedule::constant(1), Schedule::constant(0),
                       unit_box(2)));
}

TEST(Projection, IdempotentAndNonexpansive) {
  const Box box{(Vec(3) << -1, 0, 2).finished(), (Vec(3) << 1, 5, 3).finished()};
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0, 4);
  for (int i = 0; i < 1000; ++i) {
    const Vec a = Vec::NullaryExpr(3, [&] { return nd(rng); });
    const Vec b = Vec::NullaryExpr(3, [&] { return nd(rng); });
    const Vec pa = project(box, a);
    EXPECT_EQ(project(box, pa), pa);
    EXPECT_LE((pa - project(box, b)).norm(), (a - b).norm() + 1e-15);
    EXPECT_TRUE(box.contains(pa));
  }
}

TEST(MixDirections, Affine) {
  const Vec d1 = (Vec(2) << 1.0, 3.0).finished();
  const Vec d2 = (Vec(2) << -1.0, 5.0).finished();
  EXPECT_EQ(mix_directions(0.5, d1, d2), 0.5 * (d1 + d2));
  EXPECT_EQ(mix_directions(1.0, d1, d2), d1);
  EXPECT_EQ(mix_directions(0.0, d1, d2), d2);
  EXPECT_NEAR((mix_directions(0.3, d1, d2) - (0.3 * d1 + 0.7 * d2)).norm(), 0.0, 1e-15);
}

RunConfig scalar_config(const Scenario& s, int K) {
  RunConfig c;
  c.alpha = Schedule::power_log_law(1e-3, 0.75);
  c.eta = Schedule::power_law(1.0, 0.5);
  c.K = K;
  c.seed = 4;
  c.theta0 = s.theta0.pack();
  c.theta_box = default_theta_box(1, 1, 10.0);
  return c;
}

TEST(Run, ZeroIterationsReturnsInitialParameters) {
  const Scenario s = scalar_lti();
  int calls = 0;
  const Evaluator base = make_evaluator(s);
  const RunResult r = run(scalar_config(s, 0), [&](const Vec& th, bool g) {
    ++calls;
    return base(th, g);
  });
  EXPECT_EQ(r.theta, s.theta0.pack());
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(std::isnan(r.records[0].norm_d));
  EXPECT_EQ(calls, 1);
}

TEST(Run, ExactModelGradientDescentIsMonotone) {
  const Scenario s = scalar_lti();
  RunConfig c = scalar_config(s, 50);
  c.alpha = Schedule::constant(1e-3);
  c.eta = Schedule::constant(1.0);
  c.allow_invalid_schedule = true;
  const RunResult r = run(c, make_evaluator(s));
  ASSERT_EQ(r.records.size(), 51u);
  for (std::size_t k = 1; k < r.records.size(); ++k) {
    const double prev = r.records[k - 1].cost + r.records[k - 1].penalty;
    const double cur = r.records[k].cost + r.records[k].penalty;
    EXPECT_LE(cur, prev + 1e-12) << "k=" << k;
  }
  EXPECT_LT(r.records.back().cost, r.records.front().cost);
}

TEST(Run, InvalidScheduleRejectedUnlessAblation) {
  const Scenario s = scalar_lti();
  RunConfig c = scalar_config(s, 1);
  c.eta = Schedule::constant(1.0);
  EXPECT_THROW(run(c, make_evaluator(s)), Error);
  c.allow_invalid_schedule = true;
  EXPECT_NO_THROW(run(c, make_evaluator(s)));
}

TEST(Run, EvaluationCountsPerIteration) {
  const Scenario s = scalar_lti();
  int grads = 0, plain = 0;
  const Evaluator base = make_evaluator(s);
  const Evaluator counted = [&](const Vec& th, bool g) {
    (g ? grads : plain) += 1;
    return base(th, g);
  };
  run(scalar_config(s, 5), counted);
  EXPECT_EQ(grads, 5);
  // eta_0 = 1 skips the first probe; the final row adds one plain call.
  EXPECT_EQ(plain, 5);
}

TEST(Run, IteratesStayInBox) {
  const Scenario s = double_integrator();
  RunConfig c = scalar_config(s, 10);
  c.theta0 = s.theta0.pack();
  c.theta_box = default_theta_box(2, 1, 3.0);
  c.alpha = Schedule::power_log_law(0.05, 0.75);
  for (const auto& rec : run(c, make_evaluator(s)).records)
    EXPECT_TRUE(c.theta_box.contains(rec.theta));
}

TEST(Run, ErrorsCarryIterationIndex) {
  const Scenario s = scalar_lti();
  int calls = 0;
  const Evaluator base = make_evaluator(s);
  const Evaluator failing = [&](const Vec& th, bool g) {
    if (++calls == 3) throw Error(ErrorCode::QpFailed, "synthetic");
    return base(th, g);
  };
  try {
    run(scalar_config(s, 5), failing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QpFailed);
    EXPECT_EQ(std::string(e.what()).rfind("iteration 1: ", 0), 0u) << e.what();
  }
}

TEST(Run, NonFiniteModelFallback) {
  const Scenario s = scalar_lti();
  const Evaluator base = make_evaluator(s);
  const Evaluator broken = [&](const Vec& th, bool g) {
    Evaluation e = base(th, g);
    if (g) e.d1.setConstant(std::nan(""));
    return e;
  };
  RunConfig c = scalar_config(s, 3);
  EXPECT_THROW(run(c, broken), Error);
  c.fallback_on_nonfinite_model = true;
  const RunResult r = run(c, broken);
  EXPECT_TRUE(r.records[0].model_fallback);
  EXPECT_TRUE(r.theta.allFinite());
}

TEST(Run, Deterministic) {
  const Scenario s = double_integrator();
  RunConfig c = scalar_config(s, 8);
  c.theta0 = s.theta0.pack();
  c.theta_box = default_theta_box(2, 1, 10.0);
  const RunResult a = run(c, make_evaluator(s));
  const RunResult b = run(c, make_evaluator(s));
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_EQ(a.records[k].theta, b.records[k].theta);
    EXPECT_EQ(a.records[k].cost, b.records[k].cost);
    EXPECT_EQ(a.records[k].penalty, b.records[k].penalty);
    EXPECT_EQ(std::isnan(a.records[k].norm_d2), std::isnan(b.records[k].norm_d2));
    if (!std::isnan(a.records[k].norm_d2)) EXPECT_EQ(a.records[k].norm_d2, b.records[k].norm_d2);
  }
}

}  // namespace
}  // namespace mpctune
