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

// Experiment configuration: a JSON document whose sections mirror the
// library's config structs. Every key is optional and defaults to the
// struct's default; unknown keys are rejected so typos surface early.
// Errors name the offending field by its dotted path.

#ifndef RDFAIR_CONFIG_HPP_
#define RDFAIR_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "rdfair/data.hpp"
#include "rdfair/errors.hpp"
#include "rdfair/exemplar_select.hpp"
#include "rdfair/incremental_trainer.hpp"

namespace rdfair {

enum class DatasetKind { kSynthetic, kIdx, kCsv };

inline const char* dataset_kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::kSynthetic: return "synthetic";
    case DatasetKind::kIdx: return "idx";
    case DatasetKind::kCsv: return "csv";
  }
  return "?";
}

struct IdxDatasetConfig {
  IdxSource files;
  double p = 0.9;
  std::size_t samples_per_class = 100;
  std::size_t test_samples_per_class = 100;
  double threshold = 0.3;
};

struct CsvDatasetConfig {
  std::string train;
  std::string test;
  std::string y_col = "y";
  std::string g_col = "g";
};

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kSynthetic;
  BiasSpec synthetic;
  IdxDatasetConfig idx;
  CsvDatasetConfig csv;
};

struct PlanConfig {
  std::size_t classes_per_stage = 2;
  ClassOrder order = ClassOrder::kDescendingSize;
  std::vector<std::size_t> classes;  // order = given
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string output_dir = "runs";
  std::uint64_t seed = 0;
  bool checkpoints = true;
  DatasetConfig dataset;
  PlanConfig plan;
  IncrementalConfig incremental;

  // The training seed actually used: the top-level seed.
  IncrementalConfig resolved() const {
    IncrementalConfig c = incremental;
    c.train.seed = seed;
    return c;
  }

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  void validate(bool check_files = true) const;
};

namespace detail {

// Reads one JSON object, remembering which keys were consumed.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCode::kInvalidConfig, where() + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::kInvalidConfig, field(key) + ": wrong type");
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (j_.at(key).is_number_integer() && j_.at(key).get<std::int64_t>() < 0) {
        fail(ErrorCode::kInvalidConfig, field(key) + ": must be >= 0");
      }
    }
  }

  bool has(const char* key) {
    used_.insert(key);
    return j_.contains(key);
  }

  FieldReader child(const char* key) {
    used_.insert(key);
    static const nlohmann::json kEmpty = nlohmann::json::object();
    return FieldReader(j_.contains(key) ? j_.at(key) : kEmpty, field(key));
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) fail(ErrorCode::kInvalidConfig, field(k) + ": unknown key");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename Parse>
auto read_enum(FieldReader& r, const char* key, Parse parse, decltype(parse("")) fallback) {
  std::string s;
  if (!r.has(key)) return fallback;
  r.read(key, s);
  try {
    return parse(s);
  } catch (const Error&) {
    fail(ErrorCode::kInvalidConfig, r.field(key) + ": unknown value '" + s + "'");
  }
}

inline DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "synthetic") return DatasetKind::kSynthetic;
  if (s == "idx") return DatasetKind::kIdx;
  if (s == "csv") return DatasetKind::kCsv;
  fail(ErrorCode::kInvalidConfig, "unknown dataset kind '" + s + "'");
}

}  // namespace detail

inline nlohmann::json ExperimentConfig::to_json() const {
  const auto& s = dataset.synthetic;
  const auto& t = incremental.train;
  const auto& m = incremental.model;
  const auto& p = incremental.probe;
  const auto& sm = incremental.sampler;
  return {
      {"name", name},
      {"output_dir", output_dir},
      {"seed", seed},
      {"checkpoints", checkpoints},
      {"dataset",
       {{"kind", dataset_kind_name(dataset.kind)},
        {"synthetic", s.to_json()},
        {"idx",
         {{"train_images", dataset.idx.files.train_images},
          {"train_labels", dataset.idx.files.train_labels},
          {"test_images", dataset.idx.files.test_images},
          {"test_labels", dataset.idx.files.test_labels},
          {"p", dataset.idx.p},
          {"samples_per_class", dataset.idx.samples_per_class},
          {"test_samples_per_class", dataset.idx.test_samples_per_class},
          {"threshold", dataset.idx.threshold}}},
        {"csv",
         {{"train", dataset.csv.train},
          {"test", dataset.csv.test},
          {"y_col", dataset.csv.y_col},
          {"g_col", dataset.csv.g_col}}}}},
      {"plan",
       {{"classes_per_stage", plan.classes_per_stage},
        {"order", class_order_name(plan.order)},
        {"classes", plan.classes}}},
      {"train",
       {{"beta", t.beta},
        {"epsilon_sq", t.rate.epsilon_sq},
        {"lr_encoder", t.lr_encoder},
        {"lr_discriminator", t.lr_discriminator},
        {"steps_per_epoch", t.steps_per_epoch},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"disc_steps_per_enc_step", t.disc_steps_per_enc_step}}},
      {"incremental",
       {{"gamma", incremental.gamma},
        {"eta", incremental.eta},
        {"disc_on_exemplars", incremental.disc_on_exemplars}}},
      {"sampler",
       {{"kind", sampler_kind_name(sm.kind)},
        {"r", sm.r},
        {"k_eigen", sm.k_eigen},
        {"center", sm.center}}},
      {"model",
       {{"encoder_hidden", m.encoder_hidden},
        {"rep_dim", m.rep_dim},
        {"disc_hidden", m.disc_hidden},
        {"disc_out", m.disc_out}}},
      {"probe",
       {{"hidden", p.hidden},
        {"epochs", p.epochs},
        {"lr", p.lr},
        {"train_fraction", p.train_fraction},
        {"max_train_samples", p.max_train_samples}}},
  };
}

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  detail::FieldReader root(j, "");
  root.read("name", c.name);
  root.read("output_dir", c.output_dir);
  root.read("seed", c.seed);
  root.read("checkpoints", c.checkpoints);

  auto ds = root.child("dataset");
  c.dataset.kind = detail::read_enum(ds, "kind", detail::parse_dataset_kind, c.dataset.kind);
  {
    auto r = ds.child("synthetic");
    auto& s = c.dataset.synthetic;
    r.read("p", s.p);
    r.read("num_classes", s.num_classes);
    r.read("num_groups", s.num_groups);
    r.read("samples_per_class", s.samples_per_class);
    r.read("test_samples_per_class", s.test_samples_per_class);
    r.read("feature_dim", s.feature_dim);
    r.read("target_separation", s.target_separation);
    r.read("target_noise", s.target_noise);
    r.read("protected_separation", s.protected_separation);
    r.read("protected_noise", s.protected_noise);
    r.read("seed", s.seed);
    r.finish();
  }
  {
    auto r = ds.child("idx");
    auto& x = c.dataset.idx;
    r.read("train_images", x.files.train_images);
    r.read("train_labels", x.files.train_labels);
    r.read("test_images", x.files.test_images);
    r.read("test_labels", x.files.test_labels);
    r.read("p", x.p);
    r.read("samples_per_class", x.samples_per_class);
    r.read("test_samples_per_class", x.test_samples_per_class);
    r.read("threshold", x.threshold);
    r.finish();
  }
  {
    auto r = ds.child("csv");
    r.read("train", c.dataset.csv.train);
    r.read("test", c.dataset.csv.test);
    r.read("y_col", c.dataset.csv.y_col);
    r.read("g_col", c.dataset.csv.g_col);
    r.finish();
  }
  ds.finish();

  {
    auto r = root.child("plan");
    r.read("classes_per_stage", c.plan.classes_per_stage);
    c.plan.order = detail::read_enum(r, "order", parse_class_order, c.plan.order);
    r.read("classes", c.plan.classes);
    r.finish();
  }
  {
    auto r = root.child("train");
    auto& t = c.incremental.train;
    r.read("beta", t.beta);
    r.read("epsilon_sq", t.rate.epsilon_sq);
    r.read("lr_encoder", t.lr_encoder);
    r.read("lr_discriminator", t.lr_discriminator);
    r.read("steps_per_epoch", t.steps_per_epoch);
    r.read("epochs", t.epochs);
    r.read("batch_size", t.batch_size);
    r.read("disc_steps_per_enc_step", t.disc_steps_per_enc_step);
    r.finish();
  }
  {
    auto r = root.child("incremental");
    r.read("gamma", c.incremental.gamma);
    r.read("eta", c.incremental.eta);
    r.read("disc_on_exemplars", c.incremental.disc_on_exemplars);
    r.finish();
  }
  {
    auto r = root.child("sampler");
    auto& s = c.incremental.sampler;
    s.kind = detail::read_enum(r, "kind", parse_sampler_kind, s.kind);
    r.read("r", s.r);
    r.read("k_eigen", s.k_eigen);
    r.read("center", s.center);
    r.finish();
  }
  {
    auto r = root.child("model");
    auto& m = c.incremental.model;
    r.read("encoder_hidden", m.encoder_hidden);
    r.read("rep_dim", m.rep_dim);
    r.read("disc_hidden", m.disc_hidden);
    r.read("disc_out", m.disc_out);
    r.finish();
  }
  {
    auto r = root.child("probe");
    auto& p = c.incremental.probe;
    r.read("hidden", p.hidden);
    r.read("epochs", p.epochs);
    r.read("lr", p.lr);
    r.read("train_fraction", p.train_fraction);
    r.read("max_train_samples", p.max_train_samples);
    r.finish();
  }
  root.finish();
  return c;
}

inline void ExperimentConfig::validate(bool check_files) const {
  auto bad = [](const std::string& field, const std::string& why) {
    fail(ErrorCode::kInvalidConfig, field + ": " + why);
  };
  const auto& t = incremental.train;
  if (name.empty()) bad("name", "must not be empty");
  if (!(t.beta >= 0.0)) bad("train.beta", "must be >= 0");
  if (!(t.rate.epsilon_sq > 0.0 && t.rate.epsilon_sq <= 4.0)) {
    bad("train.epsilon_sq", "must lie in (0, 4]");
  }
  if (!(t.lr_encoder > 0.0)) bad("train.lr_encoder", "must be > 0");
  if (!(t.lr_discriminator > 0.0)) bad("train.lr_discriminator", "must be > 0");
  if (t.batch_size < 2) bad("train.batch_size", "must be >= 2");
  if (t.disc_steps_per_enc_step < 1) bad("train.disc_steps_per_enc_step", "must be >= 1");
  if (!(incremental.gamma >= 0.0)) bad("incremental.gamma", "must be >= 0");
  if (!(incremental.eta >= 0.0)) bad("incremental.eta", "must be >= 0");
  if (incremental.sampler.r < 1) bad("sampler.r", "must be >= 1");
  if (incremental.sampler.k_eigen < 1) bad("sampler.k_eigen", "must be >= 1");
  if (incremental.model.rep_dim < 1) bad("model.rep_dim", "must be >= 1");
  if (incremental.model.disc_out < 1) bad("model.disc_out", "must be >= 1");
  const auto& p = incremental.probe;
  if (p.hidden < 1) bad("probe.hidden", "must be >= 1");
  if (!(p.lr > 0.0)) bad("probe.lr", "must be > 0");
  if (!(p.train_fraction > 0.0 && p.train_fraction < 1.0)) {
    bad("probe.train_fraction", "must lie in (0, 1)");
  }
  if (plan.classes_per_stage < 1) bad("plan.classes_per_stage", "must be >= 1");

  switch (dataset.kind) {
    case DatasetKind::kSynthetic: {
      const auto& s = dataset.synthetic;
      if (!(s.p >= 0.0 && s.p <= 1.0)) bad("dataset.synthetic.p", "must lie in [0, 1]");
      if (s.num_classes < 1) bad("dataset.synthetic.num_classes", "must be >= 1");
      if (s.num_groups < 2) bad("dataset.synthetic.num_groups", "must be >= 2");
      if (s.samples_per_class < 1) bad("dataset.synthetic.samples_per_class", "must be >= 1");
      if (s.test_samples_per_class < 1) {
        bad("dataset.synthetic.test_samples_per_class", "must be >= 1");
      }
      if (s.feature_dim < 2) bad("dataset.synthetic.feature_dim", "must be >= 2");
      if (!(s.target_noise >= 0.0)) bad("dataset.synthetic.target_noise", "must be >= 0");
      if (!(s.protected_noise >= 0.0)) bad("dataset.synthetic.protected_noise", "must be >= 0");
      break;
    }
    case DatasetKind::kIdx: {
      const auto& x = dataset.idx;
      if (!(x.p >= 0.0 && x.p <= 1.0)) bad("dataset.idx.p", "must lie in [0, 1]");
      if (!(x.threshold > 0.0 && x.threshold <= 1.0)) bad("dataset.idx.threshold", "must lie in (0, 1]");
      if (check_files) {
        const std::pair<const char*, const std::string*> files[] = {
            {"dataset.idx.train_images", &x.files.train_images},
            {"dataset.idx.train_labels", &x.files.train_labels},
            {"dataset.idx.test_images", &x.files.test_images},
            {"dataset.idx.test_labels", &x.files.test_labels}};
        for (const auto& [field, path] : files) {
          if (!std::filesystem::is_regular_file(*path)) bad(field, "file not found: '" + *path + "'");
        }
      }
      break;
    }
    case DatasetKind::kCsv: {
      if (dataset.csv.y_col.empty()) bad("dataset.csv.y_col", "must not be empty");
      if (dataset.csv.g_col.empty()) bad("dataset.csv.g_col", "must not be empty");
      if (check_files) {
        if (!std::filesystem::is_regular_file(dataset.csv.train)) {
          bad("dataset.csv.train", "file not found: '" + dataset.csv.train + "'");
        }
        if (!std::filesystem::is_regular_file(dataset.csv.test)) {
          bad("dataset.csv.test", "file not found: '" + dataset.csv.test + "'");
        }
      }
      break;
    }
  }
  if (plan.order == ClassOrder::kGiven && plan.classes.empty()) {
    bad("plan.classes", "required when plan.order is 'given'");
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kParseError, path + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

// Sets a dotted key ("train.beta") inside a JSON document. `raw` is parsed as
// a JSON literal when possible and kept as a string otherwise.
inline void set_dotted(nlohmann::json& doc, const std::string& key, const std::string& raw) {
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorCode::kInvalidConfig, "malformed key '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = nlohmann::json::object();
    node = &(*node)[part];
    if (!node->is_object()) fail(ErrorCode::kInvalidConfig, "'" + key + "' crosses a non-object");
    start = dot + 1;
  }
}

}  // namespace rdfair

#endif  // RDFAIR_CONFIG_HPP_
