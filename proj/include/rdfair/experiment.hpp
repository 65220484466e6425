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

// Run directories, ablation grids and plot-data export.
//
// A run directory holds
//
//   config.json                resolved configuration
//   meta.json                  timestamp, library version, seed, data provenance
//   stage_<t>/report.json      evaluation after stage t
//   stage_<t>/telemetry.jsonl  one line per encoder step
//   checkpoints/               encoder and discriminator after every stage
//   summary.json, metrics.csv  last and average metrics
//
// Everything except meta.json is a pure function of the configuration.

#ifndef RDFAIR_EXPERIMENT_HPP_
#define RDFAIR_EXPERIMENT_HPP_

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rdfair/config.hpp"
#include "rdfair/data.hpp"
#include "rdfair/errors.hpp"
#include "rdfair/incremental_trainer.hpp"
#include "rdfair/nn.hpp"

namespace rdfair {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// <base>, then <base>-1, <base>-2, ... until the path is free.
inline fs::path fresh_directory(const fs::path& base) {
  fs::path candidate = base;
  for (std::size_t i = 1; fs::exists(candidate); ++i) {
    candidate = base.string() + "-" + std::to_string(i);
  }
  fs::create_directories(candidate);
  return candidate;
}

inline SplitPair load_datasets(const ExperimentConfig& cfg) {
  switch (cfg.dataset.kind) {
    case DatasetKind::kSynthetic: return generate_synthetic(cfg.dataset.synthetic);
    case DatasetKind::kIdx: {
      const auto& x = cfg.dataset.idx;
      return load_colored_mnist(x.files, x.p, x.samples_per_class, x.test_samples_per_class,
                                x.threshold, cfg.seed);
    }
    case DatasetKind::kCsv: {
      LabelMaps maps;
      SplitPair out;
      out.train = read_csv_labeled(cfg.dataset.csv.train, cfg.dataset.csv.y_col,
                                   cfg.dataset.csv.g_col, &maps);
      out.test = read_csv_labeled(cfg.dataset.csv.test, cfg.dataset.csv.y_col,
                                  cfg.dataset.csv.g_col, &maps);
      // Label universes grow as the test file is read; widen the train side.
      out.train.y.k = out.test.y.k;
      out.train.g.k = out.test.g.k;
      out.train.split = "train";
      out.test.split = "test";
      return out;
    }
  }
  fail(ErrorCode::kInvalidConfig, "unknown dataset kind");
}

inline StagePlan plan_for(const ExperimentConfig& cfg, const Dataset& train) {
  const auto sizes = train.class_sizes();
  return make_plan(sizes, cfg.plan.classes_per_stage, cfg.plan.order, cfg.plan.classes, cfg.seed);
}

struct RunOutcome {
  fs::path dir;
  ExperimentResult result;
};

inline std::string metrics_csv(std::span<const StageReport> reports) {
  std::ostringstream s;
  s << std::setprecision(17);
  s << "stage,accuracy,dp,gap_rms,leakage,leakage_baseline,old_class_accuracy,"
       "old_probe_accuracy,exemplars\n";
  for (const auto& r : reports) {
    s << r.stage << ',' << r.metrics.accuracy << ',' << r.metrics.dp << ',' << r.metrics.gap_rms
      << ',' << r.metrics.leakage << ',' << r.metrics.leakage_baseline << ',';
    if (r.old_class_accuracy) s << *r.old_class_accuracy;
    s << ',';
    if (r.old_probe_accuracy) s << *r.old_probe_accuracy;
    s << ',' << r.exemplar_count << '\n';
  }
  return s.str();
}

// Runs one configured experiment into a fresh directory under
// cfg.output_dir.
inline RunOutcome run_configured(const ExperimentConfig& cfg) {
  cfg.validate();
  const SplitPair data = load_datasets(cfg);
  const StagePlan plan = plan_for(cfg, data.train);

  RunOutcome out;
  out.dir = fresh_directory(fs::path(cfg.output_dir) / cfg.name);
  write_text(out.dir / "config.json", cfg.to_json().dump(2) + "\n");
  const nlohmann::json meta{{"timestamp", utc_timestamp()},
                            {"version", kVersion},
                            {"seed", cfg.seed},
                            {"plan", plan.to_json()},
                            {"train_provenance", data.train.provenance},
                            {"test_provenance", data.test.provenance}};
  write_text(out.dir / "meta.json", meta.dump(2) + "\n");
  if (cfg.checkpoints) fs::create_directories(out.dir / "checkpoints");

  auto observer = [&](const StageReport& rep, const std::vector<TelemetryRecord>& tel,
                      const Network& phi, const Network& disc) {
    const fs::path sd = out.dir / ("stage_" + std::to_string(rep.stage));
    fs::create_directories(sd);
    write_text(sd / "report.json", rep.to_json().dump(2) + "\n");
    std::ostringstream lines;
    for (const auto& t : tel) lines << t.to_json().dump() << '\n';
    write_text(sd / "telemetry.jsonl", lines.str());
    if (cfg.checkpoints) {
      const std::string tag = "stage_" + std::to_string(rep.stage);
      save_network(phi, (out.dir / "checkpoints" / (tag + "_encoder.json")).string());
      save_network(disc, (out.dir / "checkpoints" / (tag + "_discriminator.json")).string());
    }
  };
  out.result = run_experiment(data.train, data.test, plan, cfg.resolved(), observer);

  nlohmann::json stages = nlohmann::json::array();
  for (const auto& r : out.result.reports) stages.push_back(r.to_json());
  const nlohmann::json summary{{"summary", out.result.summary.to_json()}, {"stages", stages}};
  write_text(out.dir / "summary.json", summary.dump(2) + "\n");
  write_text(out.dir / "metrics.csv", metrics_csv(out.result.reports));
  return out;
}

// ---------------------------------------------------------------------------
// Ablation grids

struct GridAxis {
  std::string key;                  // dotted config key
  std::vector<std::string> values;  // JSON literals or bare strings
};

// "train.beta=0,1" -> {"train.beta", {"0", "1"}}
inline GridAxis parse_grid_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    fail(ErrorCode::kInvalidConfig, "grid axis must look like key=v1,v2: '" + spec + "'");
  }
  GridAxis axis{spec.substr(0, eq), {}};
  std::stringstream rest(spec.substr(eq + 1));
  std::string v;
  while (std::getline(rest, v, ',')) {
    if (v.empty()) fail(ErrorCode::kInvalidConfig, "empty value in grid axis '" + spec + "'");
    axis.values.push_back(v);
  }
  return axis;
}

inline bool has_dotted(const nlohmann::json& doc, const std::string& key) {
  const nlohmann::json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  while (std::getline(parts, part, '.')) {
    if (!node->is_object() || !node->contains(part)) return false;
    node = &node->at(part);
  }
  return true;
}

struct AblationCell {
  std::vector<std::pair<std::string, std::string>> overrides;
  bool ok = false;
  std::string error;
  fs::path dir;
  ExperimentSummary summary;
};

struct AblationOutcome {
  fs::path dir;
  std::vector<AblationCell> cells;
};

inline std::string ablation_csv(const std::vector<GridAxis>& grid,
                                const std::vector<AblationCell>& cells) {
  std::ostringstream s;
  s << std::setprecision(17) << "cell";
  for (const auto& a : grid) s << ',' << a.key;
  s << ",status,accuracy_last,accuracy_avg,dp_last,dp_avg,gap_rms_last,gap_rms_avg,"
       "leakage_last,leakage_avg,error\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    s << i;
    for (const auto& [k, v] : c.overrides) s << ',' << v;
    s << ',' << (c.ok ? "ok" : "failed");
    if (c.ok) {
      const auto& m = c.summary;
      s << ',' << m.accuracy.last << ',' << m.accuracy.average << ',' << m.dp.last << ','
        << m.dp.average << ',' << m.gap_rms.last << ',' << m.gap_rms.average << ','
        << m.leakage.last << ',' << m.leakage.average << ',';
    } else {
      std::string err = c.error;
      std::replace(err.begin(), err.end(), '"', '\'');
      s << ",,,,,,,,,\"" << err << '"';
    }
    s << '\n';
  }
  return s.str();
}

// Runs the cross product of the grid over `base`, one subdirectory per cell.
// A failing cell is recorded and the remaining cells still run.
inline AblationOutcome run_ablation(const nlohmann::json& base, const std::vector<GridAxis>& grid) {
  const ExperimentConfig base_cfg = ExperimentConfig::from_json(base);
  base_cfg.validate();
  const nlohmann::json full = base_cfg.to_json();
  for (const auto& a : grid) {
    if (!has_dotted(full, a.key)) fail(ErrorCode::kInvalidConfig, "unknown grid key '" + a.key + "'");
    if (a.values.empty()) fail(ErrorCode::kInvalidConfig, "grid key '" + a.key + "' has no values");
  }

  AblationOutcome out;
  out.dir = fresh_directory(fs::path(base_cfg.output_dir) / (base_cfg.name + "-ablation"));
  write_text(out.dir / "base_config.json", full.dump(2) + "\n");

  std::size_t total = 1;
  for (const auto& a : grid) total *= a.values.size();
  for (std::size_t cell = 0; cell < total; ++cell) {
    AblationCell c;
    nlohmann::json doc = full;
    std::size_t rest = cell;
    std::vector<std::pair<std::string, std::string>> overrides(grid.size());
    for (std::size_t i = grid.size(); i-- > 0;) {
      const auto& a = grid[i];
      overrides[i] = {a.key, a.values[rest % a.values.size()]};
      rest /= a.values.size();
    }
    c.overrides = overrides;
    try {
      for (const auto& [k, v] : overrides) set_dotted(doc, k, v);
      doc["output_dir"] = out.dir.string();
      doc["name"] = "cell_" + std::to_string(cell);
      const ExperimentConfig cfg = ExperimentConfig::from_json(doc);
      RunOutcome run = run_configured(cfg);
      c.dir = run.dir;
      c.summary = run.result.summary;
      c.ok = true;
    } catch (const std::exception& e) {
      c.error = e.what();
    }
    out.cells.push_back(std::move(c));
  }
  write_text(out.dir / "ablation.csv", ablation_csv(grid, out.cells));
  return out;
}

// ---------------------------------------------------------------------------
// Plot export

struct PlotExport {
  std::size_t telemetry_rows = 0;
  std::size_t stage_rows = 0;
  std::vector<fs::path> files;
};

inline std::vector<fs::path> stage_dirs(const fs::path& run_dir) {
  std::vector<std::pair<std::size_t, fs::path>> found;
  if (fs::is_directory(run_dir)) {
    for (const auto& e : fs::directory_iterator(run_dir)) {
      const std::string name = e.path().filename().string();
      if (!e.is_directory() || name.rfind("stage_", 0) != 0) continue;
      const std::string num = name.substr(6);
      if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) continue;
      found.emplace_back(std::stoul(num), e.path());
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [i, p] : found) out.push_back(std::move(p));
  return out;
}

inline PlotExport export_plots(const fs::path& run_dir) {
  const auto stages = stage_dirs(run_dir);
  if (stages.empty()) {
    fail(ErrorCode::kMissingTelemetry, "no stage directories in " + run_dir.string());
  }
  std::ostringstream rz, acc, gap, dp, leak;
  for (auto* s : {&rz, &acc, &gap, &dp, &leak}) *s << std::setprecision(17);
  rz << "iter,stage,R_z,R_old\n";
  acc << "stage,accuracy,old_class_accuracy,old_probe_accuracy\n";
  gap << "stage,gap_rms\n";
  dp << "stage,dp\n";
  leak << "stage,leakage,leakage_baseline\n";
  PlotExport out;
  for (const auto& sd : stages) {
    const fs::path tel = sd / "telemetry.jsonl";
    const fs::path rep = sd / "report.json";
    if (!fs::is_regular_file(tel)) fail(ErrorCode::kMissingTelemetry, "missing " + tel.string());
    if (!fs::is_regular_file(rep)) fail(ErrorCode::kMissingTelemetry, "missing " + rep.string());
    const nlohmann::json r = nlohmann::json::parse(read_text(rep));
    const auto stage = r.at("stage").get<std::size_t>();
    std::istringstream lines(read_text(tel));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const auto t = nlohmann::json::parse(line);
      rz << t.at("iter").get<std::size_t>() << ',' << stage << ',' << t.at("R_z").get<double>()
         << ',' << t.value("R_old", 0.0) << '\n';
      ++out.telemetry_rows;
    }
    const auto& m = r.at("metrics");
    acc << stage << ',' << m.at("accuracy").get<double>() << ',';
    if (!r.at("old_class_accuracy").is_null()) acc << r.at("old_class_accuracy").get<double>();
    acc << ',';
    if (r.value("old_probe_accuracy", nlohmann::json()).is_number()) {
      acc << r.at("old_probe_accuracy").get<double>();
    }
    acc << '\n';
    gap << stage << ',' << m.at("gap_rms").get<double>() << '\n';
    dp << stage << ',' << m.at("dp").get<double>() << '\n';
    leak << stage << ',' << m.at("leakage").get<double>() << ','
         << m.at("leakage_baseline").get<double>() << '\n';
    ++out.stage_rows;
  }
  const fs::path plots = run_dir / "plots";
  fs::create_directories(plots);
  const std::pair<const char*, std::ostringstream*> files[] = {
      {"r_z.csv", &rz}, {"accuracy.csv", &acc}, {"gap_rms.csv", &gap}, {"dp.csv", &dp},
      {"leakage.csv", &leak}};
  for (const auto& [name, body] : files) {
    write_text(plots / name, body->str());
    out.files.push_back(plots / name);
  }
  return out;
}

}  // namespace rdfair

#endif  // RDFAIR_EXPERIMENT_HPP_
