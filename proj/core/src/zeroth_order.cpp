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

#include "mpctune/zeroth_order.hpp"

namespace mpctune {

void SmoothingConfig::validate() const {
  require(delta > 0.0, ErrorCode::ConfigError, "smoothing: delta must be positive");
  require(n_theta >= 1, ErrorCode::ConfigError, "smoothing: n_theta must be >= 1");
}

Vec sample_sphere(CounterRng& rng, Eigen::Index n) {
  require(n >= 1, ErrorCode::DimensionMismatch, "sample_sphere: n must be >= 1");
  while (true) {
    const Vec g = rng.normal_vector(n);
    const double norm = g.norm();
    if (norm > 0.0 && std::isfinite(norm)) return g / norm;
  }
}

Vec estimate(const Vec& theta, const Vec& v, double delta, double f_theta,
             const ObjectiveFn& eval) {
  require_dims(theta.size() == v.size(), "estimate: direction size");
  require(delta > 0.0, ErrorCode::ConfigError, "estimate: delta must be positive");
  const double f_probe = eval(theta + delta * v);
  const double n = static_cast<double>(theta.size());
  return (n / delta) * (f_probe - f_theta) * v;
}

Vec estimate(const Vec& theta, const Vec& v, double delta, const ObjectiveFn& eval) {
  return estimate(theta, v, delta, eval(theta), eval);
}

SphereSampler::SphereSampler(const SmoothingConfig& config) : config_(config) {
  config_.validate();
}

Vec SphereSampler::direction(std::uint64_t k) const {
  CounterRng rng(config_.rng_seed, k);
  return sample_sphere(rng, config_.n_theta);
}

}  // namespace mpctune
