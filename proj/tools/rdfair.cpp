// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line front end.
//
//   rdfair run <config.json> [--output-dir DIR] [--seed N]
//   rdfair ablate <config.json> --grid train.beta=0,1 --grid incremental.eta=0,1
//   rdfair export-plots <run-dir>
//   rdfair validate-config <config.json>
//
// Exit status 0 on success, 1 for user errors (bad config, missing files,
// malformed inputs), 2 for internal failures. Errors are printed to stderr as
// one JSON object.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rdfair.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

bool is_user_error(rdfair::ErrorCode c) {
  using rdfair::ErrorCode;
  switch (c) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidSpec:
    case ErrorCode::kIo:
    case ErrorCode::kParseError:
    case ErrorCode::kMissingColumn:
    case ErrorCode::kBadMagic:
    case ErrorCode::kTruncated:
    case ErrorCode::kUnsupportedDtype:
    case ErrorCode::kMissingTelemetry:
    case ErrorCode::kPlanMismatch:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kEmptyStage: return true;
    default: return false;
  }
}

int report_error(const std::string& kind, const std::string& message, int status) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}, {"exit_code", status}}.dump()
            << '\n';
  return status;
}

rdfair::ExperimentConfig load_with_overrides(const std::string& path,
                                             const std::optional<std::string>& output_dir,
                                             const std::optional<std::uint64_t>& seed) {
  rdfair::ExperimentConfig cfg = rdfair::load_config(path);
  if (output_dir) cfg.output_dir = *output_dir;
  if (seed) cfg.seed = *seed;
  return cfg;
}

nlohmann::json read_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(rdfair::read_text(path), nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    rdfair::fail(rdfair::ErrorCode::kParseError, path + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware incremental representation learning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rdfair::kVersion);

  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config", config_path, "Config JSON")->required();
  run->add_option("--output-dir", output_dir, "Override output_dir");
  run->add_option("--seed", seed, "Override seed");

  std::vector<std::string> grid_specs;
  auto* ablate = app.add_subcommand("ablate", "Run a grid of config overrides");
  ablate->add_option("config", config_path, "Base config JSON")->required();
  ablate->add_option("--grid", grid_specs, "Axis as key=v1,v2 (repeatable)");
  ablate->add_option("--output-dir", output_dir, "Override output_dir");

  std::string run_dir;
  auto* plots = app.add_subcommand("export-plots", "Write plot-ready CSV series for a run");
  plots->add_option("run_dir", run_dir, "Run directory")->required();

  auto* check = app.add_subcommand("validate-config", "Validate a config and print it resolved");
  check->add_option("config", config_path, "Config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), kUserError);
  }

  try {
    if (*run) {
      const auto cfg = load_with_overrides(config_path, output_dir, seed);
      const auto out = rdfair::run_configured(cfg);
      std::cout << nlohmann::json{{"run_dir", out.dir.string()},
                                  {"summary", out.result.summary.to_json()}}
                       .dump(2)
                << '\n';
    } else if (*ablate) {
      nlohmann::json base = read_json_file(config_path);
      if (output_dir) base["output_dir"] = *output_dir;
      std::vector<rdfair::GridAxis> grid;
      for (const auto& s : grid_specs) grid.push_back(rdfair::parse_grid_axis(s));
      const auto out = rdfair::run_ablation(base, grid);
      std::size_t failed = 0;
      for (const auto& c : out.cells) failed += !c.ok;
      std::cout << nlohmann::json{{"ablation_dir", out.dir.string()},
                                  {"cells", out.cells.size()},
                                  {"failed", failed}}
                       .dump(2)
                << '\n';
    } else if (*plots) {
      const auto out = rdfair::export_plots(run_dir);
      nlohmann::json files = nlohmann::json::array();
      for (const auto& f : out.files) files.push_back(f.string());
      std::cout << nlohmann::json{{"files", files},
                                  {"telemetry_rows", out.telemetry_rows},
                                  {"stage_rows", out.stage_rows}}
                       .dump(2)
                << '\n';
    } else if (*check) {
      const auto cfg = rdfair::load_config(config_path);
      cfg.validate();
      std::cout << cfg.to_json().dump(2) << '\n';
    }
  } catch (const rdfair::Error& e) {
    return report_error(std::string(rdfair::error_code_name(e.code())), e.what(),
                        is_user_error(e.code()) ? kUserError : kInternalError);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), kInternalError);
  }
  return kOk;
}
