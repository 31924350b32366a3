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

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace mpctune::harness {

using nlohmann::json;

std::string_view to_string(PlantKind kind) {
  switch (kind) {
    case PlantKind::Scalar: return "scalar";
    case PlantKind::DoubleIntegrator: return "double_integrator";
    case PlantKind::Quadcopter: return "quadcopter";
  }
  return "unknown";
}

int ExperimentConfig::T() const {
  switch (plant) {
    case PlantKind::Scalar: return scalar.T;
    case PlantKind::DoubleIntegrator: return double_integrator.T;
    case PlantKind::Quadcopter: return quadcopter.T;
  }
  return 0;
}

int ExperimentConfig::N() const {
  switch (plant) {
    case PlantKind::Scalar: return scalar.N;
    case PlantKind::DoubleIntegrator: return double_integrator.N;
    case PlantKind::Quadcopter: return quadcopter.N;
  }
  return 0;
}

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "config " + where + ": " + what);
}

// Typed access to one JSON object; finish() rejects keys nobody asked for so
// typos do not pass silently.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) config_error(where_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) config_error(where_, "missing key '" + key + "'");
    return convert<T>(key);
  }

  Vec vec(const std::string& key, const Vec& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    const json& a = j_.at(key);
    if (!a.is_array()) config_error(path(key), "expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number()) config_error(path(key), "expected an array of numbers");
      v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    }
    return v;
  }

  Reader child(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, path(key));
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) config_error(where_, "unknown key '" + key + "'");
    }
  }

  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

 private:
  template <class T>
  T convert(const std::string& key) const {
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw std::invalid_argument("integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("boolean");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("string");
      }
      return v.get<T>();
    } catch (const std::exception& e) {
      config_error(path(key), std::string("expected ") + e.what());
    }
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

void read_quad_params(Reader r, QuadcopterParams& p) {
  p.mass = r.get("mass", p.mass);
  p.Ix = r.get("Ix", p.Ix);
  p.Iy = r.get("Iy", p.Iy);
  p.Iz = r.get("Iz", p.Iz);
  p.arm = r.get("arm", p.arm);
  p.g0 = r.get("g0", p.g0);
  p.k_f = r.get("k_f", p.k_f);
  p.k_m = r.get("k_m", p.k_m);
  p.omega_max = r.get("omega_max", p.omega_max);
  p.dt = r.get("dt", p.dt);
  r.finish();
}

void read_plant(Reader r, ExperimentConfig& cfg) {
  const auto type = r.require<std::string>("type");
  if (type == "scalar") {
    cfg.plant = PlantKind::Scalar;
    ScalarOptions& o = cfg.scalar;
    o.a = r.get("a", o.a);
    o.b = r.get("b", o.b);
    o.model_a = r.get("model_a", o.a);
    o.model_b = r.get("model_b", o.b);
    o.x0 = r.get("x0", o.x0);
    o.x_max = r.get("x_max", o.x_max);
    o.u_max = r.get("u_max", o.u_max);
  } else if (type == "double_integrator") {
    cfg.plant = PlantKind::DoubleIntegrator;
    DoubleIntegratorOptions& o = cfg.double_integrator;
    o.dt = r.get("dt", o.dt);
    o.mismatch = r.get("mismatch", o.mismatch);
    o.x0 = r.vec("x0", o.x0);
    o.p_max = r.get("p_max", o.p_max);
    o.v_max = r.get("v_max", o.v_max);
    o.u_max = r.get("u_max", o.u_max);
  } else if (type == "quadcopter") {
    cfg.plant = PlantKind::Quadcopter;
    QuadcopterOptions& o = cfg.quadcopter;
    read_quad_params(r.child("params"), o.params);
    Reader id = r.child("identification");
    o.n_traj = id.get("n_traj", o.n_traj);
    o.T_data = id.get("T_data", o.T_data);
    o.exploration = id.get("exploration", o.exploration);
    o.x0_spread = id.get("x0_spread", o.x0_spread);
    o.data_seed = id.get<std::uint64_t>("seed", o.data_seed);
    id.finish();
  } else {
    config_error(r.path("type"), "unknown plant '" + type + "'");
  }
  r.finish();
}

void set_horizons(ExperimentConfig& cfg, int N, int T) {
  cfg.scalar.N = cfg.double_integrator.N = cfg.quadcopter.N = N;
  cfg.scalar.T = cfg.double_integrator.T = cfg.quadcopter.T = T;
}

std::string hex(const unsigned char* data, unsigned len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 15];
  }
  return out;
}

}  // namespace

json schedule_to_json(const Schedule& s) {
  switch (s.kind) {
    case ScheduleKind::Constant: return {{"kind", "constant"}, {"value", s.scale}};
    case ScheduleKind::Custom: return {{"kind", "custom"}, {"table", s.table}};
    default:
      return {{"kind", std::string(to_string(s.kind))}, {"scale", s.scale}, {"exponent", s.exponent}};
  }
}

Schedule schedule_from_json(const json& j, const std::string& where) {
  Reader r(j, where);
  const auto kind = r.require<std::string>("kind");
  Schedule s;
  if (kind == "constant") {
    s = Schedule::constant(r.require<double>("value"));
  } else if (kind == "power_law" || kind == "power_log_law") {
    const double scale = r.get("scale", 1.0);
    const double exponent = r.require<double>("exponent");
    s = kind == "power_law" ? Schedule::power_law(scale, exponent)
                            : Schedule::power_log_law(scale, exponent);
  } else if (kind == "custom") {
    const Vec t = r.vec("table", Vec());
    if (t.size() == 0) config_error(r.path("table"), "custom table must be non-empty");
    s = Schedule::custom(std::vector<double>(t.data(), t.data() + t.size()));
  } else {
    config_error(r.path("kind"), "unknown schedule kind '" + kind + "'");
  }
  r.finish();
  return s;
}

ExperimentConfig parse_config(const json& input, bool paper_scale) {
  json doc = input;
  ExperimentConfig cfg;
  Reader root(doc, "");
  cfg.name = root.require<std::string>("name");

  read_plant(root.child("plant"), cfg);

  Reader mpc = root.child("mpc");
  int N = mpc.get("N", cfg.N());
  cfg.slack_quad_weight = mpc.get("slack_quad_weight", cfg.slack_quad_weight);
  cfg.slack_lin_weight = mpc.get("slack_lin_weight", cfg.slack_lin_weight);
  mpc.finish();
  int T = root.get("T", cfg.T());
  cfg.K = root.require<int>("K");

  Reader ps = root.child("paper_scale");
  const int ps_T = ps.get("T", 200), ps_N = ps.get("N", 12), ps_K = ps.get("K", 200);
  ps.finish();
  if (paper_scale) {
    T = ps_T;
    N = ps_N;
    cfg.K = ps_K;
    doc["T"] = T;
    doc["mpc"]["N"] = N;
    doc["K"] = cfg.K;
  }
  set_horizons(cfg, N, T);

  Reader obj = root.child("objective");
  if (obj.has("penalty_weight")) cfg.penalty_weight = obj.get("penalty_weight", 0.0);
  obj.finish();
  if (cfg.penalty_weight) cfg.quadcopter.penalty_weight = *cfg.penalty_weight;

  Reader th = root.child("theta0");
  const auto mode = th.get<std::string>("mode", "dare");
  if (mode == "explicit") {
    cfg.theta0 = th.vec("values", Vec());
    if (cfg.theta0.size() == 0) config_error("theta0.values", "explicit mode needs values");
  } else if (mode != "dare") {
    config_error("theta0.mode", "expected 'dare' or 'explicit'");
  }
  th.finish();
  cfg.double_integrator.theta0 = cfg.theta0;
  cfg.quadcopter.theta0 = cfg.theta0;

  Reader box = root.child("theta_box");
  cfg.theta_box.bound = box.get("bound", cfg.theta_box.bound);
  cfg.theta_box.min_weight = box.get("min_weight", cfg.theta_box.min_weight);
  box.finish();

  cfg.alpha = schedule_from_json(root.raw("alpha"), "alpha");
  const json& variants = root.raw("variants");
  if (!variants.is_array() || variants.empty())
    config_error("variants", "expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const std::string where = "variants[" + std::to_string(i) + "]";
    Reader v(variants[i], where);
    VariantConfig vc;
    vc.name = v.require<std::string>("name");
    if (vc.name.empty() || vc.name.find_first_not_of(
                               "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") !=
                               std::string::npos)
      config_error(where + ".name", "use letters, digits, '_', '.', '-'");
    if (!names.insert(vc.name).second) config_error(where + ".name", "duplicate variant");
    vc.eta = schedule_from_json(v.raw("eta"), where + ".eta");
    vc.ablation = v.get("ablation", false);
    v.finish();
    cfg.variants.push_back(std::move(vc));
  }

  cfg.delta = root.get("delta", cfg.delta);
  const json& seeds = root.raw("seeds");
  if (!seeds.is_array() || seeds.empty()) config_error("seeds", "expected a non-empty array");
  std::set<std::uint64_t> unique;
  for (const json& s : seeds) {
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      config_error("seeds", "seeds must be non-negative integers");
    cfg.seeds.push_back(s.get<std::uint64_t>());
    if (!unique.insert(cfg.seeds.back()).second) config_error("seeds", "duplicate seed");
  }
  cfg.output_dir = root.get<std::string>("output_dir", "runs/" + cfg.name);
  cfg.threads = root.get("threads", 0);
  root.finish();

  if (cfg.K < 0) config_error("K", "must be >= 0");
  if (!(cfg.delta > 0.0)) config_error("delta", "must be positive");
  if (N < 1) config_error("mpc.N", "must be >= 1");
  if (T < 1) config_error("T", "must be >= 1");
  if (cfg.threads < 0) config_error("threads", "must be >= 0");

  cfg.canonical = doc;
  cfg.canonical.erase("output_dir");
  cfg.canonical.erase("threads");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, bool paper_scale) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return parse_config(doc, paper_scale);
}

std::string config_sha256(const ExperimentConfig& cfg) {
  const std::string text = cfg.canonical.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, text.data(), text.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error(ErrorCode::IoError, "SHA-256 computation failed");
  return hex(digest, len);
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
  if (cfg.output_dir.is_absolute()) return cfg.output_dir;
  if (const char* root = std::getenv("MPCTUNE_OUTPUT_ROOT"); root && *root)
    return std::filesystem::path(root) / cfg.output_dir;
  return cfg.output_dir;
}

Scenario build_scenario(const ExperimentConfig& cfg, Dataset* data) {
  Scenario s;
  switch (cfg.plant) {
    case PlantKind::Scalar: s = scalar_lti(cfg.scalar); break;
    case PlantKind::DoubleIntegrator: s = double_integrator(cfg.double_integrator); break;
    case PlantKind::Quadcopter: s = quadcopter(cfg.quadcopter, data); break;
  }
  if (cfg.plant == PlantKind::Scalar && cfg.theta0.size() > 0) {
    require_dims(cfg.theta0.size() == 3, "theta0: scalar plant expects 3 values");
    s.theta0 = PolicyParams::unpack(cfg.theta0, 1, 1, s.theta0.theta_box);
  }
  if (cfg.penalty_weight) s.objective.penalty_weight = *cfg.penalty_weight;
  s.mpc.slack_quad_weight = cfg.slack_quad_weight;
  s.mpc.slack_lin_weight = cfg.slack_lin_weight;

  const Eigen::Index nx = s.mpc.n_x(), nu = s.mpc.n_u();
  Box box = default_theta_box(nx, nu, cfg.theta_box.bound);
  for (Eigen::Index i = 0; i < nx + nu; ++i) box.lower[i] = cfg.theta_box.min_weight;
  for (Eigen::Index i = 0; i < nx; ++i)
    box.lower[nx + nu + PolicyParams::packed_index(i, i)] = cfg.theta_box.min_weight;
  s.theta0.theta_box = box;
  s.mpc.validate();
  s.objective.validate(nx, nu);
  return s;
}

ValidationReport validate_config(const ExperimentConfig& cfg) {
  ValidationReport rep;
  for (const auto& v : cfg.variants) {
    const ScheduleReport sr = validate_schedule(cfg.alpha, v.eta);
    for (const auto& n : sr.notes) rep.notes.push_back(v.name + ": " + n);
    if (sr.valid) continue;
    if (v.ablation) {
      rep.notes.push_back(v.name + " (ablation): " + sr.message());
    } else {
      rep.errors.push_back(v.name + ": " + sr.message());
    }
  }
  if (cfg.theta_box.min_weight < 0.0 || cfg.theta_box.min_weight > cfg.theta_box.bound)
    rep.errors.push_back("theta_box: need 0 <= min_weight <= bound");
  try {
    const Scenario s = build_scenario(cfg);
    const Eigen::Index n = PolicyParams::size(s.mpc.n_x(), s.mpc.n_u());
    if (cfg.theta0.size() > 0 && cfg.theta0.size() != n)
      rep.errors.push_back("theta0: expected " + std::to_string(n) + " values, got " +
                           std::to_string(cfg.theta0.size()));
    if (s.x0.size() != s.mpc.n_x()) rep.errors.push_back("x0: wrong dimension");
    if (!s.theta0.theta_box.contains(s.theta0.pack()))
      rep.notes.push_back("theta0 lies outside theta_box and is projected");
  } catch (const Error& e) {
    rep.errors.push_back(std::string(to_string(e.code())) + ": " + e.what());
  }
  return rep;
}

}  // namespace mpctune::harness
