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

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace mpctune {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::PowerLaw: return "power_law";
    case ScheduleKind::PowerLogLaw: return "power_log_law";
    case ScheduleKind::Constant: return "constant";
    case ScheduleKind::Custom: return "custom";
  }
  return "unknown";
}

double Schedule::at(long long k) const {
  const double kk = static_cast<double>(k);
  switch (kind) {
    case ScheduleKind::PowerLaw: return scale / std::pow(kk + 1.0, exponent);
    case ScheduleKind::PowerLogLaw:
      return scale * std::log(kk + 2.0) / std::pow(kk + 1.0, exponent);
    case ScheduleKind::Constant: return scale;
    case ScheduleKind::Custom:
      require(!table.empty(), ErrorCode::ConfigError, "schedule: empty custom table");
      return table[static_cast<std::size_t>(
          std::min<long long>(k, static_cast<long long>(table.size()) - 1))];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string ScheduleReport::message() const {
  std::ostringstream os;
  os << (valid ? "valid" : "invalid");
  for (const auto& v : violations) os << "; " << v;
  for (const auto& n : notes) os << "; " << n;
  return os.str();
}

namespace {

// Decay exponent a in value ~ log^m(k) / k^a; nullopt for custom tables.
std::optional<double> decay_exponent(const Schedule& s) {
  switch (s.kind) {
    case ScheduleKind::PowerLaw:
    case ScheduleKind::PowerLogLaw: return s.exponent;
    case ScheduleKind::Constant: return 0.0;
    case ScheduleKind::Custom: return std::nullopt;
  }
  return std::nullopt;
}

bool identically_zero(const Schedule& s) {
  if (s.kind == ScheduleKind::Custom) {
    for (double v : s.table)
      if (v != 0.0) return false;
    return !s.table.empty();
  }
  return s.scale == 0.0;
}

}  // namespace

ScheduleReport validate_schedule(const Schedule& alpha, const Schedule& eta) {
  ScheduleReport rep;
  auto violate = [&](std::string what) {
    rep.valid = false;
    rep.violations.push_back(std::move(what));
  };

  // Step sizes.
  if (alpha.kind == ScheduleKind::Custom) {
    rep.summability_verified = false;
    if (alpha.table.empty()) violate("alpha: empty custom table");
    for (double v : alpha.table) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        violate("alpha: entries must be positive and finite");
        break;
      }
    }
  } else {
    if (!(alpha.scale > 0.0) || !std::isfinite(alpha.scale))
      violate("alpha: scale must be positive");
    const double a = *decay_exponent(alpha);
    if (a > 1.0) violate("alpha: sum of alpha_k converges (exponent > 1)");
    if (a <= 0.5) violate("alpha: sum of alpha_k^2 diverges (exponent <= 0.5)");
  }

  // Mixing weights.
  if (eta.kind == ScheduleKind::Custom) {
    rep.summability_verified = false;
    if (eta.table.empty()) violate("eta: empty custom table");
    for (double v : eta.table) {
      if (!(v >= 0.0 && v <= 1.0)) {
        violate("eta: entries must lie in [0, 1]");
        break;
      }
    }
  } else {
    bool in_range = eta.scale >= 0.0 && std::isfinite(eta.scale);
    if (eta.kind == ScheduleKind::Constant || eta.kind == ScheduleKind::PowerLaw) {
      in_range = in_range && eta.scale <= 1.0 &&
                 (eta.kind == ScheduleKind::Constant || eta.exponent >= 0.0 || eta.scale == 0.0);
    } else {
      // log(k+2)/(k+1)^b peaks early when b > 0; scan well past the peak.
      in_range = in_range && eta.exponent > 0.0;
      for (long long k = 0; in_range && k <= 100000; ++k) in_range = eta.at(k) <= 1.0;
    }
    if (!in_range) violate("eta: values must lie in [0, 1]");
  }

  // sum eta_k alpha_k < inf.
  if (!identically_zero(eta)) {
    const auto a = decay_exponent(alpha);
    const auto b = decay_exponent(eta);
    if (a && b) {
      // Log factors do not move the boundary: the sum converges iff a + b > 1.
      if (*a + *b <= 1.0) violate("eta*alpha: sum of eta_k alpha_k diverges (exponents sum <= 1)");
    }
  }
  if (!rep.summability_verified) rep.notes.push_back("summability unverifiable for custom tables");
  return rep;
}

Vec project(const Box& box, const Vec& theta) { return box.project(theta); }

Vec mix_directions(double eta, const Vec& d1, const Vec& d2) {
  if (eta == 1.0) return d1;
  if (eta == 0.0) return d2;
  return eta * d1 + (1.0 - eta) * d2;
}

namespace {

Vec apply_step(const Vec& theta, double alpha, double eta, const Vec& d1,
               const Vec& d2, const Box& box) {
  const Vec d = mix_directions(eta, d1, d2);
  require_dims(d.size() == theta.size(), "step: direction size");
  require(d.allFinite(), ErrorCode::NonFiniteDirection,
          "step: update direction is not finite");
  return box.project(theta - alpha * d);
}

}  // namespace

Vec step(long long k, const Vec& theta, const Vec& d1, const Vec& d2,
         const Schedule& alpha, const Schedule& eta, const Box& theta_box) {
  require_dims(d1.size() == theta.size() && d2.size() == theta.size(),
               "step: direction sizes");
  return apply_step(theta, alpha.at(k), eta.at(k), d1, d2, theta_box);
}

RunResult run(const RunConfig& config, const Evaluator& evaluate, const RecordSink& sink) {
  RunResult out;
  out.schedule_report = validate_schedule(config.alpha, config.eta);
  require(out.schedule_report.valid || config.allow_invalid_schedule, ErrorCode::ConfigError,
          "schedule: " + out.schedule_report.message());
  require(config.K >= 0, ErrorCode::ConfigError, "run: K must be >= 0");
  require_dims(config.theta_box.size() == config.theta0.size(), "run: theta box size");
  const Eigen::Index n = config.theta0.size();
  SmoothingConfig sm{config.delta, config.seed, n};
  const SphereSampler sampler(sm);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  Vec theta = config.theta_box.project(config.theta0);
  for (long long k = 0; k <= config.K; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    IterateRecord rec;
    rec.k = k;
    rec.theta = theta;
    rec.seed = config.seed;
    rec.alpha = config.alpha.at(k);
    rec.eta = config.eta.at(k);
    rec.norm_d1 = rec.norm_d2 = rec.norm_d = nan;
    const bool last = k == config.K;
    try {
      double eta = rec.eta;
      const Evaluation base = evaluate(theta, !last && eta > 0.0);
      rec.cost = base.C;
      rec.penalty = base.P;
      rec.degenerate_steps = base.degenerate_steps;
      rec.licq_violations = base.licq_violations;
      if (!last) {
        Vec d1 = Vec::Constant(n, nan);
        Vec d2 = Vec::Constant(n, nan);
        if (eta > 0.0) {
          d1 = base.d1;
          rec.norm_d1 = d1.norm();
          if (!d1.allFinite() && config.fallback_on_nonfinite_model) {
            eta = 0.0;
            rec.model_fallback = true;
          }
        }
        if (eta < 1.0) {
          const Vec v = sampler.direction(static_cast<std::uint64_t>(k));
          d2 = estimate(theta, v, config.delta, base.total(),
                        [&](const Vec& th) { return evaluate(th, false).total(); });
          rec.norm_d2 = d2.norm();
        }
        rec.norm_d = mix_directions(eta, d1, d2).norm();
        theta = apply_step(theta, rec.alpha, eta, d1, d2, config.theta_box);
      }
    } catch (const Error& e) {
      throw Error(e.code(), "iteration " + std::to_string(k) + ": " + e.what());
    }
    rec.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (sink) sink(rec);
    out.records.push_back(std::move(rec));
  }
  out.theta = theta;
  return out;
}

}  // namespace mpctune
