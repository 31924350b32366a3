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

#include "mpctune/harness/experiment.hpp"

#include "mpctune/csv.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

namespace mpctune::harness {

namespace {

std::string num_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  const ValidationReport rep = validate_config(cfg);
  if (!rep.ok()) {
    std::string msg = "invalid configuration";
    for (const auto& e : rep.errors) msg += "; " + e;
    throw Error(ErrorCode::ConfigError, msg);
  }

  ExperimentResult result;
  result.output_dir = resolve_output_dir(cfg);
  result.config_sha256 = config_sha256(cfg);
  std::error_code ec;
  std::filesystem::create_directories(result.output_dir, ec);
  require(!ec, ErrorCode::IoError, "cannot create " + result.output_dir.string());
  {
    std::ofstream os(result.output_dir / "config_resolved.json", std::ios::binary);
    os << cfg.canonical.dump(2) << '\n';
  }

  const Scenario scenario = build_scenario(cfg);
  const Vec theta0 = scenario.theta0.pack();
  const Eigen::Index n_theta = theta0.size();
  const std::string& sha = result.config_sha256;
  const std::filesystem::path& dir = result.output_dir;

  struct Job {
    const VariantConfig* variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& v : cfg.variants)
    for (std::uint64_t seed : cfg.seeds) jobs.push_back({&v, seed});
  result.summaries.resize(jobs.size());

  std::mutex log_mutex;
  auto say = [&](const std::string& line) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    *log << line << '\n';
    log->flush();
  };

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      const Job& job = jobs[j];
      const std::string tag = job.variant->name + " seed " + std::to_string(job.seed);
      try {
        RunConfig rc;
        rc.alpha = cfg.alpha;
        rc.eta = job.variant->eta;
        rc.delta = cfg.delta;
        rc.K = cfg.K;
        rc.seed = job.seed;
        rc.theta0 = theta0;
        rc.theta_box = scenario.theta0.theta_box;
        rc.allow_invalid_schedule = job.variant->ablation;
        IterateWriter writer(dir / run_file_name("iterates", job.variant->name, job.seed), sha,
                             n_theta);
        const RunResult run_result = run(rc, make_evaluator(scenario), [&](const IterateRecord& r) {
          writer.write(r);
          say("[" + tag + "] k=" + std::to_string(r.k) + " C=" + format_double(r.cost) +
              " P=" + format_double(r.penalty));
        });
        write_timing(dir / run_file_name("timing", job.variant->name, job.seed), run_result.records);
        write_trajectory(dir / run_file_name("trajectory_final", job.variant->name, job.seed), sha,
                         simulate(scenario, run_result.theta, false));
        result.summaries[j] = summarize(job.variant->name, job.seed, run_result.records);
      } catch (const Error& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error)
          first_error = std::make_exception_ptr(Error(e.code(), tag + ": " + e.what()));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  unsigned n_threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                       : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  write_summary(dir / "summary.csv", sha, result.summaries);
  render_plots(dir);
  return result;
}

std::vector<VariantStats> compare_runs(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorCode::IoError,
          "not a directory: " + dir.string());
  std::map<std::string, std::vector<RunSummary>> by_variant;
  for (const auto& [name, path] : list_run_files(dir, "iterates")) {
    const IterateFile f = read_iterates(path);
    by_variant[name.variant].push_back(summarize(name.variant, name.seed, f.records));
  }
  require(!by_variant.empty(), ErrorCode::EmptyDirectory,
          "no iterate CSV files in " + dir.string());
  std::vector<VariantStats> out;
  for (const auto& [variant, rows] : by_variant) {
    VariantStats s;
    s.variant = variant;
    s.runs = rows.size();
    std::vector<double> obj, cost, pen, its;
    for (const auto& r : rows) {
      obj.push_back(r.final_objective());
      cost.push_back(r.final_cost);
      pen.push_back(r.final_penalty);
      its.push_back(static_cast<double>(r.iterations_to_threshold));
    }
    s.median_final_objective = median(obj);
    s.median_final_cost = median(cost);
    s.median_final_penalty = median(pen);
    s.median_iterations_to_threshold = median(its);
    out.push_back(s);
  }
  auto best = std::min_element(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.median_final_objective < b.median_final_objective;
  });
  best->best = true;
  return out;
}

void print_comparison(std::ostream& os, const std::vector<VariantStats>& stats) {
  std::size_t w = 7;
  for (const auto& s : stats) w = std::max(w, s.variant.size());
  os << std::left << std::setw(static_cast<int>(w)) << "variant" << "  runs  "
     << std::setw(14) << "median C+P" << std::setw(14) << "median C" << std::setw(14)
     << "median P" << "median k_10%\n";
  for (const auto& s : stats) {
    os << std::left << std::setw(static_cast<int>(w)) << s.variant << "  " << std::setw(4)
       << s.runs << "  " << std::setw(14) << num_text(s.median_final_objective) << std::setw(14)
       << num_text(s.median_final_cost) << std::setw(14) << num_text(s.median_final_penalty)
       << std::setw(12) << num_text(s.median_iterations_to_threshold) << (s.best ? " *best" : "")
       << '\n';
  }
}

void write_model(const std::filesystem::path& path, const LinearModel& m) {
  auto rows = [](const Mat& M) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      std::vector<double> r(static_cast<std::size_t>(M.cols()));
      for (Eigen::Index j = 0; j < M.cols(); ++j) r[static_cast<std::size_t>(j)] = M(i, j);
      a.push_back(r);
    }
    return a;
  };
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["A"] = rows(m.A);
  j["B"] = rows(m.B);
  j["c"] = std::vector<double>(m.c.data(), m.c.data() + m.c.size());
  j["fit_residual"] = m.fit_residual;
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot write " + path.string());
  os << j.dump(2) << '\n';
}

LinearModel read_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::IoError, "cannot read " + path.string());
  try {
    const nlohmann::json j = nlohmann::json::parse(is);
    auto mat = [](const nlohmann::json& a) {
      const auto r = static_cast<Eigen::Index>(a.size());
      const auto c = r ? static_cast<Eigen::Index>(a[0].size()) : 0;
      Mat M(r, c);
      for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(a[i].size()) != c) throw std::invalid_argument("ragged matrix");
        for (Eigen::Index k = 0; k < c; ++k) M(i, k) = a[i][k].get<double>();
      }
      return M;
    };
    LinearModel m;
    m.A = mat(j.at("A"));
    m.B = mat(j.at("B"));
    const auto c = j.at("c").get<std::vector<double>>();
    m.c = Eigen::Map<const Vec>(c.data(), static_cast<Eigen::Index>(c.size()));
    m.fit_residual = j.value("fit_residual", 0.0);
    m.validate();
    return m;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace mpctune::harness
