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

// Class-incremental debiasing. Each stage introduces a group of unseen target
// classes; the encoder ascends
//
//   dR(Z_new, P_y) - beta dR(Z'_new, P_g)
//     - gamma S(Z_old, Zbar_old) - eta dR(Z'_old, P_g_old)
//
// where Z_old are current representations of stored exemplars, Zbar_old their
// representations frozen at the end of the previous stage and S the subspace
// similarity. After a stage the store gains exemplars of the new classes and
// every stored class is re-frozen with the just-trained encoder.

#ifndef RDFAIR_INCREMENTAL_TRAINER_HPP_
#define RDFAIR_INCREMENTAL_TRAINER_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rdfair/coding_rate.hpp"
#include "rdfair/data.hpp"
#include "rdfair/debias_trainer.hpp"
#include "rdfair/errors.hpp"
#include "rdfair/exemplar_select.hpp"
#include "rdfair/fairness_metrics.hpp"
#include "rdfair/linalg.hpp"
#include "rdfair/nn.hpp"

namespace rdfair {

enum class ClassOrder { kDescendingSize, kGiven, kRandom };

inline const char* class_order_name(ClassOrder o) {
  switch (o) {
    case ClassOrder::kDescendingSize: return "descending_size";
    case ClassOrder::kGiven: return "given";
    case ClassOrder::kRandom: return "random";
  }
  return "?";
}

inline ClassOrder parse_class_order(const std::string& s) {
  if (s == "descending_size") return ClassOrder::kDescendingSize;
  if (s == "given") return ClassOrder::kGiven;
  if (s == "random") return ClassOrder::kRandom;
  fail(ErrorCode::kInvalidConfig, "unknown class order '" + s + "'");
}

struct StagePlan {
  std::vector<std::vector<std::size_t>> stages;
  std::size_t classes_per_stage = 0;
  std::size_t num_classes = 0;

  std::size_t total_stages() const noexcept { return stages.size(); }

  void validate() const {
    const std::size_t c = classes_per_stage;
    const std::size_t t = stages.size();
    if (c == 0 || t == 0) fail(ErrorCode::kPlanMismatch, "plan has no stages");
    if (!(c * (t - 1) < num_classes && num_classes <= c * t)) {
      fail(ErrorCode::kPlanMismatch, "stage count does not fit classes_per_stage");
    }
    std::vector<bool> seen(num_classes, false);
    for (const auto& s : stages) {
      if (s.empty() || s.size() > c) fail(ErrorCode::kPlanMismatch, "stage size outside [1, c]");
      for (std::size_t cls : s) {
        if (cls >= num_classes) fail(ErrorCode::kPlanMismatch, "plan class out of range");
        if (seen[cls]) fail(ErrorCode::kPlanMismatch, "class planned in two stages");
        seen[cls] = true;
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      fail(ErrorCode::kPlanMismatch, "plan does not cover every class");
    }
  }

  nlohmann::json to_json() const {
    return {{"stages", stages}, {"classes_per_stage", classes_per_stage},
            {"num_classes", num_classes}};
  }
};

// Splits the classes into consecutive groups of c. Descending order breaks
// ties by class index; `given` must list every class exactly once.
inline StagePlan make_plan(std::span<const std::size_t> class_sizes, std::size_t c,
                           ClassOrder order, std::span<const std::size_t> given = {},
                           std::uint64_t seed = 0) {
  const std::size_t k = class_sizes.size();
  if (c == 0) fail(ErrorCode::kPlanMismatch, "classes_per_stage must be >= 1");
  std::vector<std::size_t> seq(k);
  std::iota(seq.begin(), seq.end(), 0);
  switch (order) {
    case ClassOrder::kDescendingSize:
      std::stable_sort(seq.begin(), seq.end(), [&](std::size_t a, std::size_t b) {
        return class_sizes[a] > class_sizes[b];
      });
      break;
    case ClassOrder::kGiven: seq.assign(given.begin(), given.end()); break;
    case ClassOrder::kRandom: {
      std::mt19937_64 rng(seed);
      std::shuffle(seq.begin(), seq.end(), rng);
      break;
    }
  }
  StagePlan plan;
  plan.classes_per_stage = c;
  plan.num_classes = k;
  for (std::size_t i = 0; i < seq.size(); i += c) {
    plan.stages.emplace_back(seq.begin() + static_cast<std::ptrdiff_t>(i),
                             seq.begin() + static_cast<std::ptrdiff_t>(std::min(seq.size(), i + c)));
  }
  plan.validate();
  return plan;
}

class ExemplarStore {
 public:
  ExemplarStore(std::size_t num_classes, std::size_t num_groups)
      : y_(std::vector<std::size_t>{}, num_classes), g_(std::vector<std::size_t>{}, num_groups) {}

  bool empty() const noexcept { return x_.cols() == 0; }
  std::size_t size() const noexcept { return x_.cols(); }
  const Matrix& x() const noexcept { return x_; }
  const Matrix& z_frozen() const noexcept { return z_frozen_; }
  const Partition& y() const noexcept { return y_; }
  const Partition& g() const noexcept { return g_; }
  const std::vector<std::size_t>& classes() const noexcept { return classes_; }

  void append(const Matrix& x, std::span<const std::size_t> y, std::span<const std::size_t> g) {
    if (x.cols() != y.size() || x.cols() != g.size()) {
      fail(ErrorCode::kShapeMismatch, "exemplar columns and labels differ in length");
    }
    if (!empty() && x.rows() != x_.rows()) {
      fail(ErrorCode::kShapeMismatch, "exemplar feature width changed");
    }
    x_ = empty() ? x : hcat(x_, x);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (std::find(classes_.begin(), classes_.end(), y[i]) == classes_.end()) {
        classes_.push_back(y[i]);
      }
      y_.labels.push_back(y[i]);
      g_.labels.push_back(g[i]);
    }
  }

  void refreeze(const Network& phi) {
    z_frozen_ = empty() ? Matrix() : encode_normalized(phi, x_);
  }

  std::uint64_t fingerprint() const {
    const auto v = z_frozen_.values();
    return fnv1a(std::span(reinterpret_cast<const std::uint8_t*>(v.data()), v.size_bytes()));
  }

  detail::ReplayView view() const {
    if (empty()) return {};
    return {&x_, &z_frozen_, &y_, &g_};
  }

 private:
  Matrix x_;
  Matrix z_frozen_;
  Partition y_;
  Partition g_;
  std::vector<std::size_t> classes_;
};

struct ModelConfig {
  std::vector<std::size_t> encoder_hidden{128};
  std::size_t rep_dim = 64;
  std::vector<std::size_t> disc_hidden{64};
  std::size_t disc_out = 16;

  void validate() const {
    if (rep_dim < 1) fail(ErrorCode::kInvalidConfig, "model.rep_dim must be >= 1");
    if (disc_out < 1) fail(ErrorCode::kInvalidConfig, "model.disc_out must be >= 1");
    for (auto h : encoder_hidden)
      if (h < 1) fail(ErrorCode::kInvalidConfig, "model.encoder_hidden entries must be >= 1");
    for (auto h : disc_hidden)
      if (h < 1) fail(ErrorCode::kInvalidConfig, "model.disc_hidden entries must be >= 1");
  }

  Network make_encoder(std::size_t in_dim, std::uint64_t seed) const {
    std::vector<std::size_t> dims{in_dim};
    dims.insert(dims.end(), encoder_hidden.begin(), encoder_hidden.end());
    dims.push_back(rep_dim);
    return Network::mlp(dims, seed);
  }

  Network make_discriminator(std::uint64_t seed) const {
    std::vector<std::size_t> dims{rep_dim};
    dims.insert(dims.end(), disc_hidden.begin(), disc_hidden.end());
    dims.push_back(disc_out);
    return Network::mlp(dims, seed);
  }
};

struct IncrementalConfig {
  DebiasConfig train;  // beta lives here
  double gamma = 1.0;
  double eta = 1.0;
  SamplerSpec sampler;
  bool disc_on_exemplars = false;
  ModelConfig model;
  ProbeConfig probe;

  void validate() const {
    train.validate();
    if (!(gamma >= 0.0)) fail(ErrorCode::kInvalidConfig, "gamma must be >= 0");
    if (!(eta >= 0.0)) fail(ErrorCode::kInvalidConfig, "eta must be >= 0");
    sampler.validate();
    model.validate();
  }

  detail::ObjectiveWeights weights() const { return {train.beta, gamma, eta}; }
};

// Seed of stage t. Stage 0 uses the base seed, so a one-stage run replays
// joint training exactly.
inline std::uint64_t stage_seed(std::uint64_t base, std::size_t t) {
  return base + static_cast<std::uint64_t>(t) * 1000003ULL;
}

inline void check_store(const Network& phi, const ExemplarStore& store) {
  if (!store.empty() && store.z_frozen().rows() != phi.out_dim()) {
    fail(ErrorCode::kStaleStore, "frozen exemplar width " +
                                     std::to_string(store.z_frozen().rows()) +
                                     " differs from encoder output " +
                                     std::to_string(phi.out_dim()));
  }
  if (!store.empty() && store.z_frozen().cols() != store.size()) {
    fail(ErrorCode::kStaleStore, "exemplars were added without re-freezing");
  }
}

// One ascent step of the four-term objective in phi's parameters.
inline EncoderReport incremental_encoder_step(Network& phi, const Network& disc,
                                              const LabeledBatch& batch,
                                              const ExemplarStore& store,
                                              const IncrementalConfig& cfg) {
  batch.validate();
  if (phi.out_dim() != disc.in_dim()) {
    fail(ErrorCode::kShapeMismatch, "encoder output width does not match discriminator input");
  }
  check_store(phi, store);
  auto obj = detail::encoder_objective(phi, disc, batch, store.view(), cfg.weights(),
                                       cfg.train.rate);
  phi.adam_step(negated(std::move(obj.grads)), AdamConfig{cfg.train.lr_encoder});
  return obj.report;
}

struct StageTraining {
  std::vector<TelemetryRecord> telemetry;
  double final_epoch_r_z = 0.0;  // mean R(Z) over the last epoch's steps
};

// Alternating discriminator/encoder training on one stage's data.
inline StageTraining run_stage(Network& phi, Network& disc, const LabeledBatch& stage_data,
                               const ExemplarStore& store, const IncrementalConfig& cfg,
                               std::size_t stage_index, std::size_t first_iter = 0) {
  cfg.validate();
  stage_data.validate();
  if (stage_data.size() == 0) fail(ErrorCode::kEmptyStage, "stage has no training samples");
  if (phi.out_dim() != disc.in_dim()) {
    fail(ErrorCode::kShapeMismatch, "encoder output width does not match discriminator input");
  }
  check_store(phi, store);
  DebiasConfig dc = cfg.train;
  dc.seed = stage_seed(cfg.train.seed, stage_index);
  detail::LoopOptions opt;
  opt.weights = cfg.weights();
  opt.replay = store.view();
  opt.disc_on_exemplars = cfg.disc_on_exemplars;
  opt.first_iter = first_iter;
  StageTraining out;
  out.telemetry = detail::alternating_loop(phi, disc, stage_data, dc, opt);
  if (!out.telemetry.empty()) {
    const std::size_t per_epoch = out.telemetry.size() / std::max<std::size_t>(1, dc.epochs);
    const std::size_t from = out.telemetry.size() - std::max<std::size_t>(1, per_epoch);
    double sum = 0.0;
    for (std::size_t i = from; i < out.telemetry.size(); ++i) sum += out.telemetry[i].enc.r_z;
    out.final_epoch_r_z = sum / static_cast<double>(out.telemetry.size() - from);
  }
  return out;
}

// Adds r exemplars per class present in `stage_data` (selected on the current
// encoder's representations) and re-freezes every stored class.
inline void finish_stage(const Network& phi, const LabeledBatch& stage_data, ExemplarStore& store,
                         const IncrementalConfig& cfg, std::size_t stage_index) {
  stage_data.validate();
  const auto members = stage_data.y.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].empty()) continue;
    const LabeledBatch cls = stage_data.subset(members[c]);
    const Matrix reps = encode_normalized(phi, cls.x);
    std::vector<std::size_t> pick;
    try {
      pick = select_exemplars(reps, cfg.sampler, stage_seed(cfg.train.seed, stage_index) + c);
    } catch (const Error& e) {
      fail(ErrorCode::kSamplerFailure, std::string("class ") + std::to_string(c) + ": " + e.what());
    }
    std::sort(pick.begin(), pick.end());
    const LabeledBatch chosen = cls.subset(pick);
    store.append(chosen.x, chosen.y.labels, chosen.g.labels);
  }
  store.refreeze(phi);
}

struct StageReport {
  std::size_t stage = 0;
  std::vector<std::size_t> new_classes;
  std::vector<std::size_t> seen_classes;
  std::size_t unseen_count = 0;
  MetricReport metrics;
  std::vector<std::pair<std::size_t, double>> per_class_accuracy;
  std::optional<double> old_class_accuracy;  // classes of earlier stages
  std::optional<double> old_probe_accuracy;  // same classes, probe trained on them alone
  std::size_t exemplar_count = 0;
  std::string store_fingerprint;
  double final_epoch_r_z = 0.0;
  std::size_t iterations = 0;

  nlohmann::json to_json() const {
    nlohmann::json pcs = nlohmann::json::array();
    for (const auto& [c, a] : per_class_accuracy) pcs.push_back({{"class", c}, {"accuracy", a}});
    return {{"stage", stage},
            {"new_classes", new_classes},
            {"seen_classes", seen_classes},
            {"unseen_count", unseen_count},
            {"metrics", metrics.to_json()},
            {"per_class_accuracy", pcs},
            {"old_class_accuracy",
             old_class_accuracy ? nlohmann::json(*old_class_accuracy) : nlohmann::json(nullptr)},
            {"old_probe_accuracy",
             old_probe_accuracy ? nlohmann::json(*old_probe_accuracy) : nlohmann::json(nullptr)},
            {"exemplar_count", exemplar_count},
            {"store_fingerprint", store_fingerprint},
            {"final_epoch_r_z", final_epoch_r_z},
            {"iterations", iterations}};
  }
};

struct EvaluationInput {
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
  std::span<const std::size_t> seen;
  std::span<const std::size_t> old;
};

// Post-stage evaluation on frozen representations: a target probe trained on
// the train split of seen classes and scored on their test split, fairness
// metrics of its predictions, a protected-attribute leakage probe, and a
// probe over the classes of earlier stages alone.
inline void evaluate_stage(const Network& phi, const EvaluationInput& in, const ProbeConfig& pcfg,
                           std::uint64_t seed, StageReport& report) {
  const auto tr_idx = in.train->indices_of_classes(in.seen);
  const auto te_idx = in.test->indices_of_classes(in.seen);
  if (tr_idx.empty() || te_idx.empty()) {
    fail(ErrorCode::kEmptyDataset, "no samples of the seen classes to evaluate");
  }
  const Dataset tr = in.train->subset(tr_idx);
  const Dataset te = in.test->subset(te_idx);
  const Matrix z_tr = encode_normalized(phi, tr.features);
  const Matrix z_te = encode_normalized(phi, te.features);

  ProbeConfig target_cfg = pcfg;
  target_cfg.seed = seed;
  const Probe probe(z_tr, tr.y.labels, target_cfg);
  const auto pred = probe.predict(z_te);
  report.metrics.accuracy = accuracy(te.y.labels, pred);

  PredictionLog log{te.y.labels, pred, te.g.labels, te.y.k, te.g.k};
  const GroupFairness gf = group_fairness(log);
  report.metrics.dp = gf.dp;
  report.metrics.gap_rms = gf.gaps.rms;
  report.metrics.per_class_gaps = gf.gaps.per_class;
  report.metrics.undefined_count = gf.gaps.undefined_count;

  ProbeConfig leak_cfg = pcfg;
  leak_cfg.seed = seed + 1;
  const LeakageResult leak = probe_leakage(z_te, te.g, seed + 2, leak_cfg);
  report.metrics.leakage = leak.accuracy;
  report.metrics.leakage_baseline = leak.majority_baseline;

  std::size_t old_hit = 0, old_total = 0;
  for (std::size_t c : in.seen) {
    std::size_t hit = 0, total = 0;
    for (std::size_t i = 0; i < te.size(); ++i) {
      if (te.y.labels[i] != c) continue;
      ++total;
      hit += pred[i] == c;
    }
    report.per_class_accuracy.emplace_back(
        c, total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0);
    if (std::find(in.old.begin(), in.old.end(), c) != in.old.end()) {
      old_hit += hit;
      old_total += total;
    }
  }
  if (old_total > 0) {
    report.old_class_accuracy = static_cast<double>(old_hit) / static_cast<double>(old_total);
  }

  const auto old_tr = in.train->indices_of_classes(in.old);
  const auto old_te = in.test->indices_of_classes(in.old);
  if (!old_tr.empty() && !old_te.empty()) {
    const Dataset otr = in.train->subset(old_tr);
    const Dataset ote = in.test->subset(old_te);
    ProbeConfig old_cfg = pcfg;
    old_cfg.seed = seed + 3;
    const Probe old_probe(encode_normalized(phi, otr.features), otr.y.labels, old_cfg);
    report.old_probe_accuracy =
        accuracy(ote.y.labels, old_probe.predict(encode_normalized(phi, ote.features)));
  }
}

struct ExperimentSummary {
  LastAverage accuracy;
  LastAverage dp;
  LastAverage gap_rms;
  LastAverage leakage;

  nlohmann::json to_json() const {
    auto la = [](const LastAverage& v) { return nlohmann::json{{"last", v.last}, {"average", v.average}}; };
    return {{"accuracy", la(accuracy)}, {"dp", la(dp)}, {"gap_rms", la(gap_rms)},
            {"leakage", la(leakage)}};
  }
};

inline ExperimentSummary summarize(std::span<const StageReport> reports) {
  std::vector<double> acc, dp, gap, leak;
  for (const auto& r : reports) {
    acc.push_back(r.metrics.accuracy);
    dp.push_back(r.metrics.dp);
    gap.push_back(r.metrics.gap_rms);
    leak.push_back(r.metrics.leakage);
  }
  return {last_and_average(acc), last_and_average(dp), last_and_average(gap),
          last_and_average(leak)};
}

struct ExperimentResult {
  std::vector<StageReport> reports;
  std::vector<std::vector<TelemetryRecord>> telemetry;  // per stage
  ExperimentSummary summary;
};

// Called after each stage with the report, its telemetry and both networks.
using StageObserver = std::function<void(const StageReport&, const std::vector<TelemetryRecord>&,
                                         const Network&, const Network&)>;

inline ExperimentResult run_experiment(const Dataset& train, const Dataset& test,
                                       const StagePlan& plan, const IncrementalConfig& cfg,
                                       const StageObserver& observer = {}) {
  cfg.validate();
  train.validate();
  test.validate();
  plan.validate();
  if (plan.num_classes != train.y.k || test.y.k != train.y.k) {
    fail(ErrorCode::kPlanMismatch, "plan covers " + std::to_string(plan.num_classes) +
                                       " classes, dataset has " + std::to_string(train.y.k));
  }
  if (train.dim() != test.dim()) fail(ErrorCode::kDimMismatch, "train and test feature widths");

  Network phi = cfg.model.make_encoder(train.dim(), cfg.train.seed);
  Network disc = cfg.model.make_discriminator(cfg.train.seed + 1);
  ExemplarStore store(train.y.k, train.g.k);

  ExperimentResult result;
  std::vector<std::size_t> seen;
  std::size_t iter = 0;
  for (std::size_t t = 0; t < plan.total_stages(); ++t) {
    const auto& classes = plan.stages[t];
    const std::vector<std::size_t> old = seen;
    const auto idx = train.indices_of_classes(classes);
    if (idx.empty()) {
      fail(ErrorCode::kEmptyStage, "stage " + std::to_string(t) + " has no training samples");
    }
    const LabeledBatch stage_data = train.subset(idx).batch();

    StageTraining st = run_stage(phi, disc, stage_data, store, cfg, t, iter);
    iter += st.telemetry.size();
    finish_stage(phi, stage_data, store, cfg, t);
    seen.insert(seen.end(), classes.begin(), classes.end());

    StageReport rep;
    rep.stage = t;
    rep.new_classes = classes;
    rep.seen_classes = seen;
    rep.unseen_count = plan.num_classes - seen.size();
    rep.exemplar_count = store.size();
    rep.store_fingerprint = hex64(store.fingerprint());
    rep.final_epoch_r_z = st.final_epoch_r_z;
    rep.iterations = st.telemetry.size();
    evaluate_stage(phi, {&train, &test, seen, old}, cfg.probe, stage_seed(cfg.train.seed, t) + 17,
                   rep);
    if (observer) observer(rep, st.telemetry, phi, disc);
    result.reports.push_back(std::move(rep));
    result.telemetry.push_back(std::move(st.telemetry));
  }
  result.summary = summarize(result.reports);
  return result;
}

}  // namespace rdfair

#endif  // RDFAIR_INCREMENTAL_TRAINER_HPP_
