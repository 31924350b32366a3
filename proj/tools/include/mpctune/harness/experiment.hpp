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
 * @brief Experiment runner, run comparison and plotting. Plots are
 * regenerated from the CSV files alone.
 */

#include "mpctune/harness/config.hpp"
#include "mpctune/harness/records.hpp"

#include <iosfwd>

namespace mpctune::harness {

struct ExperimentResult {
  std::filesystem::path output_dir;
  std::string config_sha256;
  /// Variant-major, seeds in config order.
  std::vector<RunSummary> summaries;
};

/// Variants x seeds in a worker pool; writes iterate, trajectory and timing
/// files per run, then summary.csv and the plots. `log` may be null.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

struct VariantStats {
  std::string variant;
  std::size_t runs = 0;
  double median_final_objective = 0.0;
  double median_final_cost = 0.0;
  double median_final_penalty = 0.0;
  double median_iterations_to_threshold = 0.0;
  bool best = false;
};

/// Reads every iterates_*.csv in dir. Throws EmptyDirectory if there are
/// none, ParseError naming the offending file.
std::vector<VariantStats> compare_runs(const std::filesystem::path& dir);
void print_comparison(std::ostream& os, const std::vector<VariantStats>& stats);

/// Files named <prefix>_<variant>_<seed>.csv in dir, sorted by (variant, seed).
std::vector<std::pair<RunFileName, std::filesystem::path>> list_run_files(
    const std::filesystem::path& dir, const std::string& prefix);

/// convergence.svg and trajectory.svg from the CSV files in dir.
void render_plots(const std::filesystem::path& dir);

double median(std::vector<double> v);

void write_model(const std::filesystem::path& path, const LinearModel& m);
LinearModel read_model(const std::filesystem::path& path);

}  // namespace mpctune::harness
