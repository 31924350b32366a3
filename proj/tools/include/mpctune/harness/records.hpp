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
 * @brief Versioned CSV artifacts: iterate logs, final trajectories, run
 * summaries. Doubles use 17 significant digits so parsing is lossless.
 */

#include "mpctune/closed_loop.hpp"
#include "mpctune/optimizer.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <iosfwd>
#include <string>
#include <vector>

namespace mpctune::harness {

inline constexpr int kSchemaVersion = 1;

/// "# schema_version=1" and "# config_sha256=<hex>".
void write_header(std::ostream& os, const std::string& config_sha256);

struct FileHeader {
  int schema_version = 0;
  std::string config_sha256;
};

/// Columns: k, seed, cost, penalty, eta, alpha, norm_d1, norm_d2, norm_d,
/// degenerate_steps, licq_violations, model_fallback, theta_0..theta_{n-1}.
/// Wall time is excluded so reruns are byte-identical; it goes to the
/// timing file instead.
std::vector<std::string> iterate_columns(Eigen::Index n_theta);
std::string format_iterate(const IterateRecord& r);

class IterateWriter {
 public:
  IterateWriter(const std::filesystem::path& path, const std::string& config_sha256,
                Eigen::Index n_theta);
  void write(const IterateRecord& r);

 private:
  std::ofstream os_;
  std::filesystem::path path_;
};

struct IterateFile {
  FileHeader header;
  std::vector<IterateRecord> records;
};

/// ParseError messages name `source`.
IterateFile parse_iterates(std::istream& is, const std::string& source);
IterateFile read_iterates(const std::filesystem::path& path);

void write_timing(const std::filesystem::path& path, const std::vector<IterateRecord>& records);

/// Columns t, x_0.., u_0..; the last row has no input (NaN).
void write_trajectory(const std::filesystem::path& path, const std::string& config_sha256,
                      const Rollout& r);

struct Trajectory {
  FileHeader header;
  std::vector<Vec> states;
  std::vector<Vec> inputs;
};
Trajectory read_trajectory(const std::filesystem::path& path);

struct RunSummary {
  std::string variant;
  std::uint64_t seed = 0;
  double final_cost = 0.0;
  double final_penalty = 0.0;
  double best_objective = 0.0;
  /// First k with C_k + P_k <= 1.1 (C_K + P_K).
  long long iterations_to_threshold = 0;

  double final_objective() const { return final_cost + final_penalty; }
};

RunSummary summarize(const std::string& variant, std::uint64_t seed,
                     const std::vector<IterateRecord>& records);

void write_summary(const std::filesystem::path& path, const std::string& config_sha256,
                   const std::vector<RunSummary>& rows);

/// iterates_<variant>_<seed>.csv; the seed is the text after the last '_'.
struct RunFileName {
  std::string variant;
  std::uint64_t seed = 0;
};
std::optional<RunFileName> parse_run_file_name(const std::string& filename,
                                               const std::string& prefix);
std::string run_file_name(const std::string& prefix, const std::string& variant,
                          std::uint64_t seed);

}  // namespace mpctune::harness
