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
 * @brief One-point randomized-smoothing gradient estimate
 * d2 = (n / delta) [C(theta + delta v) - C(theta)] v with v uniform on the
 * unit sphere.
 */

#include "mpctune/rng.hpp"

#include <cstdint>
#include <functional>

namespace mpctune {

struct SmoothingConfig {
  double delta = 1e-4;
  std::uint64_t rng_seed = 0;
  Eigen::Index n_theta = 0;

  void validate() const;
};

/// Normalized Gaussian draw; redraws on the (measure-zero) zero vector.
Vec sample_sphere(CounterRng& rng, Eigen::Index n);

using ObjectiveFn = std::function<double(const Vec& theta)>;

/// Uses the cached base value f_theta, so eval runs exactly once.
Vec estimate(const Vec& theta, const Vec& v, double delta, double f_theta,
             const ObjectiveFn& eval);

/// Evaluates both points (exactly two calls of eval).
Vec estimate(const Vec& theta, const Vec& v, double delta, const ObjectiveFn& eval);

/// Direction stream: v_k depends only on (seed, k).
class SphereSampler {
 public:
  explicit SphereSampler(const SmoothingConfig& config);

  Vec direction(std::uint64_t k) const;
  const SmoothingConfig& config() const { return config_; }

 private:
  SmoothingConfig config_;
};

}  // namespace mpctune
