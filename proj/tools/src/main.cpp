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

// mpctune command line: run, compare, identify, validate, plot, dataset.

#include "mpctune/harness/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace mpctune;
using namespace mpctune::harness;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int report(const Error& e, int exit_code) {
  nlohmann::json j;
  j["error"] = {{"code", std::string(to_string(e.code()))},
                {"message", e.what()},
                {"exit_code", exit_code}};
  std::cerr << j.dump() << '\n';
  return exit_code;
}

int report(const std::exception& e, int exit_code) {
  return report(Error(ErrorCode::IoError, e.what()), exit_code);
}

// Config loading and validation failures map to 2, anything later to 3.
template <class Stage1, class Stage2>
int staged(Stage1 load, Stage2 execute) {
  try {
    load();
  } catch (const Error& e) {
    return report(e, kExitConfig);
  } catch (const std::exception& e) {
    return report(e, kExitConfig);
  }
  try {
    execute();
  } catch (const Error& e) {
    return report(e, e.code() == ErrorCode::ConfigError ? kExitConfig : kExitRuntime);
  } catch (const std::exception& e) {
    return report(e, kExitRuntime);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MPC policy tuning with hybrid model-based / zeroth-order gradients"};
  app.require_subcommand(1);

  std::string config_path, dir, dataset_path, out_path, output_override;
  bool paper_scale = false, quiet = false, no_offset = false;
  int threads = -1;

  auto* run = app.add_subcommand("run", "Run every variant x seed of an experiment config");
  run->add_option("config", config_path, "JSON experiment config")->required();
  run->add_flag("--paper-scale", paper_scale, "Use the paper_scale T, N and K");
  run->add_option("--output", output_override, "Override output_dir");
  run->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  run->add_flag("-q,--quiet", quiet, "No per-iteration progress");

  auto* validate = app.add_subcommand("validate", "Check schedules and dimensions of a config");
  validate->add_option("config", config_path, "JSON experiment config")->required();
  validate->add_flag("--paper-scale", paper_scale, "Use the paper_scale T, N and K");

  auto* compare = app.add_subcommand("compare", "Median final objective per variant");
  compare->add_option("dir", dir, "Run output directory")->required();

  auto* identify = app.add_subcommand("identify", "Least-squares linear model from a dataset CSV");
  identify->add_option("dataset", dataset_path, "Transition CSV (t, x.., u.., xn..)")->required();
  identify->add_option("out", out_path, "Model JSON to write")->required();
  identify->add_flag("--no-offset", no_offset, "Fit x+ = A x + B u without a constant");

  auto* plot = app.add_subcommand("plot", "Regenerate the SVG plots from the CSVs in a directory");
  plot->add_option("dir", dir, "Run output directory")->required();

  auto* dataset = app.add_subcommand("dataset", "Write the identification data of a quadcopter config");
  dataset->add_option("config", config_path, "JSON experiment config")->required();
  dataset->add_option("out", out_path, "Transition CSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ExperimentConfig cfg;
  auto load = [&] {
    cfg = load_config(config_path, paper_scale);
    if (!output_override.empty()) cfg.output_dir = output_override;
    if (threads >= 0) cfg.threads = threads;
  };

  if (*run) {
    return staged(
        [&] {
          load();
          const ValidationReport rep = validate_config(cfg);
          for (const auto& n : rep.notes) std::cerr << "note: " << n << '\n';
          if (!rep.ok()) {
            std::string msg = "invalid configuration";
            for (const auto& e : rep.errors) msg += "; " + e;
            throw Error(ErrorCode::ConfigError, msg);
          }
        },
        [&] {
          const ExperimentResult r = run_experiment(cfg, quiet ? nullptr : &std::cerr);
          std::cout << "wrote " << r.output_dir.string() << " (config_sha256=" << r.config_sha256
                    << ")\n";
          print_comparison(std::cout, compare_runs(r.output_dir));
        });
  }
  if (*validate) {
    int status = 0;
    const int rc = staged(load, [&] {
      const ValidationReport rep = validate_config(cfg);
      nlohmann::json j;
      j["valid"] = rep.ok();
      j["errors"] = rep.errors;
      j["notes"] = rep.notes;
      j["config_sha256"] = config_sha256(cfg);
      std::cout << j.dump(2) << '\n';
      status = rep.ok() ? 0 : kExitConfig;
    });
    return rc != 0 ? rc : status;
  }
  if (*compare) {
    return staged([] {}, [&] { print_comparison(std::cout, compare_runs(dir)); });
  }
  if (*plot) {
    return staged([] {}, [&] {
      render_plots(dir);
      std::cout << "wrote " << (std::filesystem::path(dir) / "convergence.svg").string() << '\n';
    });
  }
  if (*identify) {
    return staged([] {}, [&] {
      FitOptions f;
      f.with_offset = !no_offset;
      const LinearModel m = fit_linear_model(read_dataset(dataset_path), f);
      write_model(out_path, m);
      std::cout << "fit residual " << m.fit_residual << " (n_x=" << m.n_x() << ", n_u=" << m.n_u()
                << ")\n";
    });
  }
  if (*dataset) {
    return staged(
        [&] {
          load();
          if (cfg.plant != PlantKind::Quadcopter)
            throw Error(ErrorCode::ConfigError, "dataset: only quadcopter configs identify a model");
        },
        [&] {
          Dataset data;
          build_scenario(cfg, &data);
          write_dataset(out_path, data);
          std::cout << "wrote " << data.size() << " transitions to " << out_path << '\n';
        });
  }
  return 0;
}
