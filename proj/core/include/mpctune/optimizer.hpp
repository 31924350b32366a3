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

/**
 * @file
 * @brief Projected hybrid update
 * theta+ = Proj[theta - alpha_k (eta_k d1 + (1 - eta_k) d2)] with vanishing
 * step sizes, schedule validation and the iterate stream.
 */

#include "mpctune/zeroth_order.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mpctune {

enum class ScheduleKind { PowerLaw, PowerLogLaw, Constant, Custom };

std::string_view to_string(ScheduleKind kind);

/// PowerLaw:    scale / (k+1)^exponent
/// PowerLogLaw: scale * log(k+2) / (k+1)^exponent
/// Constant:    scale
/// Custom:      table[k], holding the last entry past the end.
struct Schedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double scale = 1.0;
  double exponent = 0.0;
  std::vector<double> table;

  static Schedule power_law(double scale, double exponent) {
    return {ScheduleKind::PowerLaw, scale, exponent, {}};
  }
  static Schedule power_log_law(double scale, double exponent) {
    return {ScheduleKind::PowerLogLaw, scale, exponent, {}};
  }
  static Schedule constant(double value) { return {ScheduleKind::Constant, value, 0.0, {}}; }
  static Schedule custom(std::vector<double> table) {
    return {ScheduleKind::Custom, 1.0, 0.0, std::move(table)};
  }

  double at(long long k) const;
};

struct ScheduleReport {
  bool valid = true;
  /// False for custom tables, whose sums cannot be checked from finitely
  /// many entries.
  bool summability_verified = true;
  std::vector<std::string> violations;
  std::vector<std::string> notes;

  std::string message() const;
};

/// Checks alpha_k > 0, sum alpha = inf, sum alpha^2 < inf, eta_k in [0, 1]
/// and sum eta alpha < inf. Closed forms are checked on their exponents.
ScheduleReport validate_schedule(const Schedule& alpha, const Schedule& eta);

/// Componentwise clamp onto the box.
Vec project(const Box& box, const Vec& theta);

/// d = eta d1 + (1 - eta) d2. A zero weight drops its branch entirely so an
/// unevaluated (NaN) direction does not leak in.
Vec mix_directions(double eta, const Vec& d1, const Vec& d2);

/// Throws NonFiniteDirection if the mixed direction is not finite.
Vec step(long long k, const Vec& theta, const Vec& d1, const Vec& d2,
         const Schedule& alpha, const Schedule& eta, const Box& theta_box);

struct IterateRecord {
  long long k = 0;
  Vec theta;
  double cost = 0.0;
  double penalty = 0.0;
  double eta = 0.0;
  double alpha = 0.0;
  /// NaN when the branch was not evaluated.
  double norm_d1 = 0.0;
  double norm_d2 = 0.0;
  double norm_d = 0.0;
  int degenerate_steps = 0;
  int licq_violations = 0;
  /// Iteration used eta = 0 after a non-finite model direction.
  bool model_fallback = false;
  double wall_time = 0.0;
  std::uint64_t seed = 0;
};

/// One closed-loop evaluation of the objective and, on request, d1.
struct Evaluation {
  double C = 0.0;
  double P = 0.0;
  Vec d1;
  int degenerate_steps = 0;
  int licq_violations = 0;

  double total() const { return C + P; }
};
using Evaluator = std::function<Evaluation(const Vec& theta, bool with_gradient)>;

struct RunConfig {
  Schedule alpha;
  Schedule eta;
  double delta = 1e-4;
  int K = 0;
  std::uint64_t seed = 0;
  Vec theta0;
  Box theta_box;
  /// Run even if the schedules fail validation (used for the eta = 0 / 1
  /// ablations).
  bool allow_invalid_schedule = false;
  /// Replace a non-finite model direction by eta = 0 for that step.
  bool fallback_on_nonfinite_model = false;
};

struct RunResult {
  /// Rows k = 0..K; row K evaluates the final iterate and has NaN norms.
  std::vector<IterateRecord> records;
  Vec theta;
  ScheduleReport schedule_report;
};

using RecordSink = std::function<void(const IterateRecord&)>;

RunResult run(const RunConfig& config, const Evaluator& evaluate,
              const RecordSink& sink = {});

}  // namespace mpctune
