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
 * @brief Experiment configuration: one JSON file fully determines a run,
 * seeds included. The schema is documented in the README.
 */

#include "mpctune/optimizer.hpp"
#include "mpctune/scenarios.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mpctune::harness {

enum class PlantKind { Scalar, DoubleIntegrator, Quadcopter };

std::string_view to_string(PlantKind kind);

struct VariantConfig {
  std::string name;
  Schedule eta;
  /// Runs even when its schedules fail validation (the eta = 0 / 1 ablations).
  bool ablation = false;
};

struct ThetaBoxConfig {
  double bound = 1e3;
  /// Lower bound on p_Q, p_R and the diagonal of L.
  double min_weight = 0.0;
};

struct ExperimentConfig {
  std::string name;
  PlantKind plant = PlantKind::Scalar;
  ScalarOptions scalar;
  DoubleIntegratorOptions double_integrator;
  QuadcopterOptions quadcopter;

  double slack_quad_weight = 1.0;
  double slack_lin_weight = 25.0;
  std::optional<double> penalty_weight;

  /// Empty selects the plant's DARE initialisation.
  Vec theta0;
  ThetaBoxConfig theta_box;

  Schedule alpha;
  std::vector<VariantConfig> variants;
  double delta = 1e-4;
  int K = 0;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;
  /// 0 picks the hardware concurrency.
  int threads = 0;

  /// Resolved document (paper-scale overrides applied) without the keys that
  /// cannot change results (output_dir, threads).
  nlohmann::json canonical;

  int T() const;
  int N() const;
};

/// Throws ConfigError (or ParseError for malformed JSON).
ExperimentConfig parse_config(const nlohmann::json& doc, bool paper_scale = false);
ExperimentConfig load_config(const std::filesystem::path& path, bool paper_scale = false);

/// Hex SHA-256 of the canonical document; recorded in every output header.
std::string config_sha256(const ExperimentConfig& cfg);

/// Relative output_dir resolved against $MPCTUNE_OUTPUT_ROOT when set.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> notes;

  bool ok() const { return errors.empty(); }
};

/// Schedules of every variant plus dimension checks against the built
/// scenario. Ablation variants may fail schedule validation (noted only).
ValidationReport validate_config(const ExperimentConfig& cfg);

Scenario build_scenario(const ExperimentConfig& cfg, Dataset* data = nullptr);

nlohmann::json schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const nlohmann::json& j, const std::string& where);

}  // namespace mpctune::harness
