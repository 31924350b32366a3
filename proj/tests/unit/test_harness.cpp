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

#include "mpctune/harness/config.hpp"
#include "mpctune/harness/experiment.hpp"
#include "mpctune/harness/records.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace mpctune;
using namespace mpctune::harness;
using nlohmann::json;

namespace {

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            (std::string("mpctune_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json scalar_doc(const fs::path& out, int K = 4) {
  json doc = json::parse(R"({
    "name": "scalar_test",
    "plant": {"type": "scalar"},
    "mpc": {"N": 5},
    "T": 10,
    "theta0": {"mode": "explicit", "values": [1.0, 1.0, 1.0]},
    "theta_box": {"bound": 10.0},
    "alpha": {"kind": "power_log_law", "scale": 1e-3, "exponent": 0.75},
    "variants": [
      {"name": "hybrid", "eta": {"kind": "power_law", "scale": 1.0, "exponent": 0.5}},
      {"name": "model_only", "eta": {"kind": "constant", "value": 1.0}, "ablation": true},
      {"name": "zeroth_order", "eta": {"kind": "constant", "value": 0.0}, "ablation": true}
    ],
    "delta": 1e-4,
    "seeds": [1, 2],
    "threads": 1
  })");
  doc["K"] = K;
  doc["output_dir"] = out.string();
  return doc;
}

IterateRecord sample_record(long long k) {
  IterateRecord r;
  r.k = k;
  r.seed = 7;
  r.theta = (Vec(3) << 0.1, 1.0 / 3.0, -2.5e-7).finished();
  r.cost = 12.345678901234567;
  r.penalty = 0.0;
  r.eta = 0.5;
  r.alpha = 1e-3;
  r.norm_d1 = 3.0;
  r.norm_d2 = std::numeric_limits<double>::quiet_NaN();
  r.norm_d = 2.0;
  r.degenerate_steps = 1;
  r.licq_violations = 2;
  r.model_fallback = true;
  return r;
}

}  // namespace

TEST(Records, IterateRoundTripIsLossless) {
  TempDir tmp;
  const fs::path p = tmp.path() / "iterates_a_7.csv";
  {
    IterateWriter w(p, "abc123", 3);
    w.write(sample_record(0));
    w.write(sample_record(1));
  }
  const IterateFile f = read_iterates(p);
  EXPECT_EQ(f.header.schema_version, kSchemaVersion);
  EXPECT_EQ(f.header.config_sha256, "abc123");
  ASSERT_EQ(f.records.size(), 2u);
  const IterateRecord want = sample_record(1);
  const IterateRecord& got = f.records[1];
  EXPECT_EQ(got.k, 1);
  EXPECT_EQ(got.seed, 7u);
  EXPECT_EQ(got.cost, want.cost);
  EXPECT_EQ(got.theta, want.theta);
  EXPECT_TRUE(std::isnan(got.norm_d2));
  EXPECT_EQ(got.licq_violations, 2);
  EXPECT_TRUE(got.model_fallback);
}

TEST(Records, ParseErrorNamesFileAndLine) {
  std::istringstream is("# schema_version=1\n# config_sha256=x\n"
                        "k,seed,cost\n0,1,not_a_number\n");
  try {
    parse_iterates(is, "broken.csv");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("broken.csv:"), std::string::npos) << e.what();
  }
}

TEST(Records, RunFileNames) {
  EXPECT_EQ(run_file_name("iterates", "hybrid_g0.5", 3), "iterates_hybrid_g0.5_3.csv");
  const auto n = parse_run_file_name("iterates_hybrid_g0.5_12.csv", "iterates");
  ASSERT_TRUE(n.has_value());
  EXPECT_EQ(n->variant, "hybrid_g0.5");
  EXPECT_EQ(n->seed, 12u);
  EXPECT_FALSE(parse_run_file_name("timing_a_1.csv", "iterates").has_value());
  EXPECT_FALSE(parse_run_file_name("iterates_a_x.csv", "iterates").has_value());
}

TEST(Records, SummaryThreshold) {
  std::vector<IterateRecord> rs;
  for (double c : {10.0, 5.0, 2.1, 2.0, 2.0}) {
    IterateRecord r;
    r.k = static_cast<long long>(rs.size());
    r.cost = c;
    rs.push_back(r);
  }
  const RunSummary s = summarize("v", 1, rs);
  EXPECT_EQ(s.final_cost, 2.0);
  EXPECT_EQ(s.best_objective, 2.0);
  EXPECT_EQ(s.iterations_to_threshold, 2);
}

TEST(Config, UnknownKeyRejected) {
  json doc = scalar_doc("/tmp/unused");
  doc["typo_key"] = 1;
  try {
    parse_config(doc);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("typo_key"), std::string::npos);
  }
}

TEST(Config, InvalidScheduleReportedUnlessAblation) {
  json doc = scalar_doc("/tmp/unused");
  doc["variants"] = json::parse(
      R"([{"name": "slow", "eta": {"kind": "power_law", "scale": 1.0, "exponent": 0.25}}])");
  EXPECT_FALSE(validate_config(parse_config(doc)).ok());
  doc["variants"][0]["ablation"] = true;
  EXPECT_TRUE(validate_config(parse_config(doc)).ok());
}

TEST(Config, HashIgnoresOutputLocation) {
  const ExperimentConfig a = parse_config(scalar_doc("/tmp/a"));
  json other = scalar_doc("/tmp/b");
  other["threads"] = 3;
  const ExperimentConfig b = parse_config(other);
  EXPECT_EQ(config_sha256(a), config_sha256(b));
  EXPECT_EQ(config_sha256(a).size(), 64u);
  json seeds = scalar_doc("/tmp/a");
  seeds["seeds"] = json::array({1, 3});
  EXPECT_NE(config_sha256(a), config_sha256(parse_config(seeds)));
}

TEST(Config, FullScaleOverrides) {
  json doc = scalar_doc("/tmp/unused");
  doc["paper_scale"] = {{"T", 30}, {"K", 9}};
  const ExperimentConfig desk = parse_config(doc);
  const ExperimentConfig big = parse_config(doc, true);
  EXPECT_EQ(desk.T(), 10);
  EXPECT_EQ(big.T(), 30);
  EXPECT_EQ(big.K, 9);
}

TEST(Experiment, ZeroIterationsGivesSingleRows) {
  TempDir tmp;
  const ExperimentConfig cfg = parse_config(scalar_doc(tmp.path(), 0));
  run_experiment(cfg);
  for (const char* v : {"hybrid", "model_only", "zeroth_order"}) {
    const IterateFile f = read_iterates(tmp.path() / run_file_name("iterates", v, 1));
    EXPECT_EQ(f.records.size(), 1u) << v;
  }
  for (const char* svg : {"convergence.svg", "trajectory.svg"}) {
    const std::string text = slurp(tmp.path() / svg);
    EXPECT_EQ(text.rfind("<?xml", 0), 0u) << svg;
    EXPECT_NE(text.find("<svg"), std::string::npos) << svg;
    EXPECT_NE(text.find("</svg>"), std::string::npos) << svg;
  }
}

TEST(Experiment, WritesOneFilePerRunAndSummary) {
  TempDir tmp;
  const ExperimentConfig cfg = parse_config(scalar_doc(tmp.path()));
  const ExperimentResult res = run_experiment(cfg);
  EXPECT_EQ(res.summaries.size(), 6u);
  EXPECT_EQ(list_run_files(tmp.path(), "iterates").size(), 6u);
  EXPECT_EQ(list_run_files(tmp.path(), "trajectory_final").size(), 6u);

  std::ifstream is(tmp.path() / "summary.csv");
  std::string line;
  int data_rows = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++data_rows;
  }
  EXPECT_EQ(data_rows, 6);

  const Trajectory tr = read_trajectory(tmp.path() / run_file_name("trajectory_final", "hybrid", 1));
  EXPECT_EQ(tr.states.size(), 11u);
  EXPECT_EQ(tr.inputs.size(), 10u);
}

TEST(Experiment, RerunIsByteIdentical) {
  TempDir a, b;
  fs::create_directories(a.path() / "x");
  const ExperimentConfig ca = parse_config(scalar_doc(a.path() / "x"));
  const ExperimentConfig cb = parse_config(scalar_doc(b.path()));
  run_experiment(ca);
  run_experiment(cb);
  for (const auto& [name, path] : list_run_files(a.path() / "x", "iterates"))
    EXPECT_EQ(slurp(path), slurp(b.path() / path.filename())) << path.filename();
}

TEST(Experiment, ThreadCountDoesNotChangeResults) {
  TempDir a, b;
  json ja = scalar_doc(a.path());
  json jb = scalar_doc(b.path());
  jb["threads"] = 4;
  run_experiment(parse_config(ja));
  run_experiment(parse_config(jb));
  for (const auto& [name, path] : list_run_files(a.path(), "iterates"))
    EXPECT_EQ(slurp(path), slurp(b.path() / path.filename())) << path.filename();
}

TEST(Compare, SingleRunAndEmptyDirectory) {
  TempDir tmp;
  json doc = scalar_doc(tmp.path());
  doc["variants"] = json::array({doc["variants"][0]});
  doc["seeds"] = json::array({5});
  run_experiment(parse_config(doc));
  const auto stats = compare_runs(tmp.path());
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].runs, 1u);
  EXPECT_TRUE(stats[0].best);

  TempDir empty;
  fs::create_directories(empty.path() / "nothing");
  try {
    compare_runs(empty.path() / "nothing");
    FAIL() << "expected EmptyDirectory";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyDirectory);
  }
}

TEST(Compare, MedianOfEvenAndOdd) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(Model, JsonRoundTrip) {
  TempDir tmp;
  LinearModel m;
  m.A = (Mat(2, 2) << 1.0, 0.1, 0.0, 1.0).finished();
  m.B = (Mat(2, 1) << 0.005, 0.1).finished();
  m.c = (Vec(2) << 1e-3, -2e-3).finished();
  m.fit_residual = 0.25;
  write_model(tmp.path() / "m.json", m);
  const LinearModel r = read_model(tmp.path() / "m.json");
  EXPECT_EQ(r.A, m.A);
  EXPECT_EQ(r.B, m.B);
  EXPECT_EQ(r.c, m.c);
  EXPECT_EQ(r.fit_residual, m.fit_residual);
}
