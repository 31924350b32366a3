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

#include "mpctune/harness/records.hpp"

#include "mpctune/csv.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <limits>

namespace mpctune::harness {

namespace {

const std::vector<std::string> kFixedColumns = {
    "k",       "seed",   "cost",   "penalty",          "eta",
    "alpha",   "norm_d1", "norm_d2", "norm_d", "degenerate_steps",
    "licq_violations", "model_fallback"};

[[noreturn]] void parse_error(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": " + what);
}

template <class Int>
Int parse_int(const std::string& field, const std::string& source, std::size_t line) {
  Int v{};
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || end != field.data() + field.size())
    parse_error(source, line, "bad integer '" + field + "'");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::IoError, "cannot write " + path.string());
  return os;
}

// Consumes the '# key=value' lines; returns the first non-comment line.
FileHeader read_header(std::istream& is, const std::string& source, std::string& first,
                       std::size_t& lineno) {
  FileHeader h;
  while (std::getline(is, first)) {
    ++lineno;
    if (!first.empty() && first.back() == '\r') first.pop_back();
    if (first.rfind("# ", 0) != 0) return h;
    const auto eq = first.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = first.substr(2, eq - 2), value = first.substr(eq + 1);
    if (key == "schema_version") h.schema_version = parse_int<int>(value, source, lineno);
    if (key == "config_sha256") h.config_sha256 = value;
  }
  parse_error(source, lineno, "missing column header");
}

void check_schema(const FileHeader& h, const std::string& source) {
  if (h.schema_version != kSchemaVersion)
    parse_error(source, 1, "unsupported schema_version " + std::to_string(h.schema_version));
}

}  // namespace

void write_header(std::ostream& os, const std::string& config_sha256) {
  os << "# schema_version=" << kSchemaVersion << '\n';
  os << "# config_sha256=" << config_sha256 << '\n';
}

std::vector<std::string> iterate_columns(Eigen::Index n_theta) {
  std::vector<std::string> cols = kFixedColumns;
  for (Eigen::Index i = 0; i < n_theta; ++i) cols.push_back("theta_" + std::to_string(i));
  return cols;
}

std::string format_iterate(const IterateRecord& r) {
  std::vector<std::string> f{std::to_string(r.k),           std::to_string(r.seed),
                             format_double(r.cost),         format_double(r.penalty),
                             format_double(r.eta),          format_double(r.alpha),
                             format_double(r.norm_d1),      format_double(r.norm_d2),
                             format_double(r.norm_d),       std::to_string(r.degenerate_steps),
                             std::to_string(r.licq_violations), r.model_fallback ? "1" : "0"};
  for (double v : r.theta) f.push_back(format_double(v));
  return join_csv(f);
}

IterateWriter::IterateWriter(const std::filesystem::path& path, const std::string& config_sha256,
                             Eigen::Index n_theta)
    : os_(open_out(path)), path_(path) {
  write_header(os_, config_sha256);
  os_ << join_csv(iterate_columns(n_theta)) << '\n';
}

void IterateWriter::write(const IterateRecord& r) {
  os_ << format_iterate(r) << '\n';
  os_.flush();
  require(static_cast<bool>(os_), ErrorCode::IoError, "write failed: " + path_.string());
}

IterateFile parse_iterates(std::istream& is, const std::string& source) {
  IterateFile out;
  std::string line;
  std::size_t lineno = 0;
  out.header = read_header(is, source, line, lineno);
  check_schema(out.header, source);
  const auto cols = split_csv(line);
  const std::size_t nf = kFixedColumns.size();
  if (cols.size() < nf || !std::equal(kFixedColumns.begin(), kFixedColumns.end(), cols.begin()))
    parse_error(source, lineno, "unexpected columns");
  const auto n_theta = static_cast<Eigen::Index>(cols.size() - nf);
  if (cols != iterate_columns(n_theta)) parse_error(source, lineno, "unexpected theta columns");
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != cols.size())
      parse_error(source, lineno, "expected " + std::to_string(cols.size()) + " fields, got " +
                                      std::to_string(f.size()));
    const std::string ctx = source + ":" + std::to_string(lineno);
    IterateRecord r;
    r.k = parse_int<long long>(f[0], source, lineno);
    r.seed = parse_int<std::uint64_t>(f[1], source, lineno);
    r.cost = parse_double(f[2], ctx);
    r.penalty = parse_double(f[3], ctx);
    r.eta = parse_double(f[4], ctx);
    r.alpha = parse_double(f[5], ctx);
    r.norm_d1 = parse_double(f[6], ctx);
    r.norm_d2 = parse_double(f[7], ctx);
    r.norm_d = parse_double(f[8], ctx);
    r.degenerate_steps = parse_int<int>(f[9], source, lineno);
    r.licq_violations = parse_int<int>(f[10], source, lineno);
    if (f[11] != "0" && f[11] != "1") parse_error(source, lineno, "model_fallback must be 0 or 1");
    r.model_fallback = f[11] == "1";
    r.theta.resize(n_theta);
    for (Eigen::Index i = 0; i < n_theta; ++i)
      r.theta[i] = parse_double(f[nf + static_cast<std::size_t>(i)], ctx);
    out.records.push_back(std::move(r));
  }
  if (out.records.empty()) parse_error(source, lineno, "no iterate rows");
  return out;
}

IterateFile read_iterates(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::IoError, "cannot read " + path.string());
  return parse_iterates(is, path.string());
}

void write_timing(const std::filesystem::path& path, const std::vector<IterateRecord>& records) {
  std::ofstream os = open_out(path);
  os << "k,wall_time_s\n";
  for (const auto& r : records) os << r.k << ',' << format_double(r.wall_time) << '\n';
}

void write_trajectory(const std::filesystem::path& path, const std::string& config_sha256,
                      const Rollout& r) {
  std::ofstream os = open_out(path);
  write_header(os, config_sha256);
  const Eigen::Index nx = r.states.front().size();
  const Eigen::Index nu = r.inputs.empty() ? 0 : r.inputs.front().size();
  std::vector<std::string> head{"t"};
  for (Eigen::Index i = 0; i < nx; ++i) head.push_back("x_" + std::to_string(i));
  for (Eigen::Index i = 0; i < nu; ++i) head.push_back("u_" + std::to_string(i));
  os << join_csv(head) << '\n';
  for (std::size_t t = 0; t < r.states.size(); ++t) {
    std::vector<std::string> row{std::to_string(t)};
    for (double v : r.states[t]) row.push_back(format_double(v));
    for (Eigen::Index i = 0; i < nu; ++i)
      row.push_back(t < r.inputs.size() ? format_double(r.inputs[t][i])
                                        : format_double(std::numeric_limits<double>::quiet_NaN()));
    os << join_csv(row) << '\n';
  }
  require(static_cast<bool>(os), ErrorCode::IoError, "write failed: " + path.string());
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::IoError, "cannot read " + path.string());
  const std::string source = path.string();
  Trajectory out;
  std::string line;
  std::size_t lineno = 0;
  out.header = read_header(is, source, line, lineno);
  check_schema(out.header, source);
  const auto cols = split_csv(line);
  if (cols.empty() || cols[0] != "t") parse_error(source, lineno, "first column must be t");
  Eigen::Index nx = 0, nu = 0;
  for (std::size_t i = 1; i < cols.size(); ++i) (cols[i].rfind("x_", 0) == 0 ? nx : nu) += 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != cols.size()) parse_error(source, lineno, "wrong field count");
    const std::string ctx = source + ":" + std::to_string(lineno);
    Vec x(nx), u(nu);
    for (Eigen::Index i = 0; i < nx; ++i) x[i] = parse_double(f[1 + i], ctx);
    for (Eigen::Index i = 0; i < nu; ++i) u[i] = parse_double(f[1 + nx + i], ctx);
    out.states.push_back(x);
    if (u.allFinite()) out.inputs.push_back(u);
  }
  if (out.states.empty()) parse_error(source, lineno, "no trajectory rows");
  return out;
}

RunSummary summarize(const std::string& variant, std::uint64_t seed,
                     const std::vector<IterateRecord>& records) {
  require(!records.empty(), ErrorCode::ConfigError, "summarize: no records");
  RunSummary s;
  s.variant = variant;
  s.seed = seed;
  s.final_cost = records.back().cost;
  s.final_penalty = records.back().penalty;
  s.best_objective = kInf;
  for (const auto& r : records) s.best_objective = std::min(s.best_objective, r.cost + r.penalty);
  const double threshold = 1.1 * s.final_objective();
  s.iterations_to_threshold = records.back().k;
  for (const auto& r : records) {
    if (r.cost + r.penalty <= threshold) {
      s.iterations_to_threshold = r.k;
      break;
    }
  }
  return s;
}

void write_summary(const std::filesystem::path& path, const std::string& config_sha256,
                   const std::vector<RunSummary>& rows) {
  std::ofstream os = open_out(path);
  write_header(os, config_sha256);
  os << "variant,seed,final_cost,final_penalty,final_objective,best_objective,"
        "iterations_to_threshold\n";
  for (const auto& r : rows) {
    os << join_csv({r.variant, std::to_string(r.seed), format_double(r.final_cost),
                    format_double(r.final_penalty), format_double(r.final_objective()),
                    format_double(r.best_objective), std::to_string(r.iterations_to_threshold)})
       << '\n';
  }
  require(static_cast<bool>(os), ErrorCode::IoError, "write failed: " + path.string());
}

std::optional<RunFileName> parse_run_file_name(const std::string& filename,
                                               const std::string& prefix) {
  const std::string head = prefix + "_";
  const std::string tail = ".csv";
  if (filename.size() <= head.size() + tail.size() || filename.rfind(head, 0) != 0 ||
      filename.compare(filename.size() - tail.size(), tail.size(), tail) != 0)
    return std::nullopt;
  const std::string stem = filename.substr(head.size(), filename.size() - head.size() - tail.size());
  const auto us = stem.rfind('_');
  if (us == std::string::npos || us == 0 || us + 1 == stem.size()) return std::nullopt;
  RunFileName out;
  out.variant = stem.substr(0, us);
  const std::string seed = stem.substr(us + 1);
  const auto [end, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), out.seed);
  if (ec != std::errc() || end != seed.data() + seed.size()) return std::nullopt;
  return out;
}

std::string run_file_name(const std::string& prefix, const std::string& variant,
                          std::uint64_t seed) {
  return prefix + "_" + variant + "_" + std::to_string(seed) + ".csv";
}

}  // namespace mpctune::harness
