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
#include "mpctune/mpc.hpp"
#include "mpctune/qp.hpp"
#include "mpctune/qp_diff.hpp"
#include "mpctune/scenarios.hpp"
#include "mpctune/zeroth_order.hpp"

#include <benchmark/benchmark.h>

using namespace mpctune;

namespace {

const Scenario& di() {
  static const Scenario s = double_integrator();
  return s;
}

// Identification runs once per process.
const Scenario& quad() {
  static const Scenario s = quadcopter();
  return s;
}

MpcQp quad_qp() { return assemble(quad().mpc, quad().theta0, quad().x0); }

}  // namespace

static void BM_BuildDualQuadcopter(benchmark::State& state) {
  const MpcQp m = quad_qp();
  for (auto _ : state) benchmark::DoNotOptimize(build_dual(m.qp));
}
BENCHMARK(BM_BuildDualQuadcopter)->Unit(benchmark::kMillisecond);

static void BM_SolveQpQuadcopter(benchmark::State& state) {
  const MpcQp m = quad_qp();
  const DualProblem dp = build_dual(m.qp);
  for (auto _ : state) benchmark::DoNotOptimize(solve_qp(m.qp, dp));
}
BENCHMARK(BM_SolveQpQuadcopter)->Unit(benchmark::kMillisecond);

static void BM_DifferentiateQuadcopter(benchmark::State& state) {
  const MpcQp m = quad_qp();
  const DualProblem dp = build_dual(m.qp);
  const QpSolution sol = solve_qp(m.qp, dp);
  const Eigen::Index n_x = quad().mpc.model.A.rows();
  for (auto _ : state) benchmark::DoNotOptimize(differentiate(m.qp, dp, m.sens, sol, n_x));
}
BENCHMARK(BM_DifferentiateQuadcopter)->Unit(benchmark::kMillisecond);

static void BM_MpcStep(benchmark::State& state) {
  const Scenario& s = state.range(0) ? quad() : di();
  MpcOptions opts;
  opts.jacobians = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(mpc(s.mpc, s.theta0, s.x0, opts));
}
BENCHMARK(BM_MpcStep)
    ->ArgNames({"quad", "jac"})
    ->Args({0, 0})
    ->Args({0, 1})
    ->Args({1, 0})
    ->Args({1, 1})
    ->Unit(benchmark::kMillisecond);

static void BM_EvaluateDoubleIntegrator(benchmark::State& state) {
  const Vec theta = di().theta0.pack();
  const bool grad = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(di(), theta, grad));
}
BENCHMARK(BM_EvaluateDoubleIntegrator)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_EvaluateQuadcopter(benchmark::State& state) {
  const Vec theta = quad().theta0.pack();
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(quad(), theta, true));
}
BENCHMARK(BM_EvaluateQuadcopter)->Unit(benchmark::kSecond)->Iterations(2);

static void BM_ZerothOrderQuadratic(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Vec theta = Vec::Ones(n);
  const ObjectiveFn f = [](const Vec& t) { return t.squaredNorm(); };
  std::uint64_t k = 0;
  for (auto _ : state) {
    CounterRng rng(1, k++);
    const Vec v = sample_sphere(rng, n);
    benchmark::DoNotOptimize(estimate(theta, v, 1e-4, f));
  }
}
BENCHMARK(BM_ZerothOrderQuadratic)->Arg(6)->Arg(94);

BENCHMARK_MAIN();
