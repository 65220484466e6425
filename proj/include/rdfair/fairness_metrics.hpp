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

// Group-fairness metrics over prediction logs and probe-based evaluation of
// frozen representations.

#ifndef RDFAIR_FAIRNESS_METRICS_HPP_
#define RDFAIR_FAIRNESS_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"
#include "rdfair/coding_rate.hpp"
#include "rdfair/errors.hpp"
#include "rdfair/linalg.hpp"
#include "rdfair/nn.hpp"

namespace rdfair {

struct PredictionLog {
  std::vector<std::size_t> true_y;
  std::vector<std::size_t> pred_y;
  std::vector<std::size_t> g;
  std::size_t num_classes = 0;
  std::size_t num_groups = 2;

  std::size_t size() const noexcept { return true_y.size(); }

  void validate() const {
    if (true_y.empty()) fail(ErrorCode::kEmpty, "prediction log is empty");
    if (pred_y.size() != true_y.size() || g.size() != true_y.size()) {
      fail(ErrorCode::kShapeMismatch, "prediction log columns differ in length");
    }
    for (std::size_t i = 0; i < size(); ++i) {
      if (true_y[i] >= num_classes || pred_y[i] >= num_classes || g[i] >= num_groups) {
        fail(ErrorCode::kShapeMismatch, "prediction log entry outside its label universe");
      }
    }
  }
};

struct TprGap {
  double gap = 0.0;
  bool defined = true;  // false when a group has no true samples of the class
};

// TPR_{a,y} - TPR_{b,y}.
inline TprGap tpr_gap(const PredictionLog& log, std::size_t y, std::size_t group_a,
                      std::size_t group_b) {
  log.validate();
  std::size_t pos_a = 0, hit_a = 0, pos_b = 0, hit_b = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.true_y[i] != y) continue;
    const bool hit = log.pred_y[i] == y;
    if (log.g[i] == group_a) {
      ++pos_a;
      hit_a += hit;
    } else if (log.g[i] == group_b) {
      ++pos_b;
      hit_b += hit;
    }
  }
  if (pos_a == 0 || pos_b == 0) return {0.0, false};
  return {static_cast<double>(hit_a) / static_cast<double>(pos_a) -
              static_cast<double>(hit_b) / static_cast<double>(pos_b),
          true};
}

struct GapSummary {
  double rms = 0.0;
  std::vector<double> per_class;  // indexed by class; undefined classes hold 0
  std::size_t undefined_count = 0;
};

// Root mean square of the per-class TPR gaps over the classes that occur in
// the log. A class seen in only one of the two groups has an undefined gap: it
// counts as 0 and is tallied in undefined_count.
inline GapSummary gap_rms(const PredictionLog& log, std::size_t group_a = 0,
                          std::size_t group_b = 1) {
  log.validate();
  GapSummary out;
  out.per_class.resize(log.num_classes, 0.0);
  std::vector<bool> present(log.num_classes, false);
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.g[i] == group_a || log.g[i] == group_b) present[log.true_y[i]] = true;
  }
  double acc = 0.0;
  std::size_t classes = 0;
  for (std::size_t y = 0; y < log.num_classes; ++y) {
    if (!present[y]) continue;
    ++classes;
    const TprGap gap = tpr_gap(log, y, group_a, group_b);
    if (!gap.defined) ++out.undefined_count;
    out.per_class[y] = gap.gap;
    acc += gap.gap * gap.gap;
  }
  out.rms = classes ? std::sqrt(acc / static_cast<double>(classes)) : 0.0;
  return out;
}

// sum_y |p(yhat = y | a) - p(yhat = y | b)|
inline double demographic_parity(const PredictionLog& log, std::size_t group_a = 0,
                                 std::size_t group_b = 1) {
  log.validate();
  std::vector<double> rate_a(log.num_classes, 0.0), rate_b(log.num_classes, 0.0);
  std::size_t n_a = 0, n_b = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log.g[i] == group_a) {
      ++n_a;
      rate_a[log.pred_y[i]] += 1.0;
    } else if (log.g[i] == group_b) {
      ++n_b;
      rate_b[log.pred_y[i]] += 1.0;
    }
  }
  if (n_a == 0 || n_b == 0) fail(ErrorCode::kMissingGroup, "a protected group has no samples");
  double dp = 0.0;
  for (std::size_t y = 0; y < log.num_classes; ++y) {
    dp += std::abs(rate_a[y] / static_cast<double>(n_a) - rate_b[y] / static_cast<double>(n_b));
  }
  return dp;
}

struct LastAverage {
  double last = 0.0;
  double average = 0.0;
};

inline LastAverage last_and_average(std::span<const double> per_stage) {
  if (per_stage.empty()) fail(ErrorCode::kEmpty, "no stages to summarize");
  double sum = 0.0;
  for (double v : per_stage) sum += v;
  return {per_stage.back(), sum / static_cast<double>(per_stage.size())};
}

// ---------------------------------------------------------------------------
// Probing

struct ProbeConfig {
  std::size_t hidden = 32;
  std::size_t epochs = 200;
  double lr = 1e-2;
  double train_fraction = 0.8;       // leakage split
  std::size_t max_train_samples = 0;  // 0: no cap
  std::uint64_t seed = 0;
};

// A classifier trained on frozen representations. Labels are compacted to the
// classes present at training time and mapped back on prediction.
class Probe {
 public:
  Probe(const Matrix& reps, std::span<const std::size_t> labels, const ProbeConfig& cfg) {
    if (reps.cols() != labels.size()) fail(ErrorCode::kShapeMismatch, "probe label count");
    if (labels.empty()) fail(ErrorCode::kEmpty, "probe has no training samples");
    std::map<std::size_t, std::size_t> index;
    for (std::size_t l : labels) index.emplace(l, 0);
    for (auto& [label, slot] : index) {
      slot = classes_.size();
      classes_.push_back(label);
    }
    std::vector<std::size_t> target;
    target.reserve(labels.size());
    for (std::size_t l : labels) target.push_back(index.at(l));

    Matrix x = reps;
    if (cfg.max_train_samples > 0 && reps.cols() > cfg.max_train_samples) {
      std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
      std::vector<std::size_t> keep(reps.cols());
      std::iota(keep.begin(), keep.end(), 0);
      std::shuffle(keep.begin(), keep.end(), rng);
      keep.resize(cfg.max_train_samples);
      std::sort(keep.begin(), keep.end());
      x = gather_cols(reps, keep);
      std::vector<std::size_t> t2;
      for (std::size_t i : keep) t2.push_back(target[i]);
      target = std::move(t2);
    }

    const std::size_t out = std::max<std::size_t>(classes_.size(), 2);
    net_ = Network::mlp({reps.rows(), cfg.hidden, out}, cfg.seed);
    const AdamConfig adam{cfg.lr};
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      auto [logits, trace] = net_.forward(x);
      const SoftmaxLoss loss = softmax_cross_entropy(logits, target);
      net_.adam_step(net_.backward(trace, loss.grad).params, adam);
    }
  }

  std::vector<std::size_t> predict(const Matrix& reps) const {
    std::vector<std::size_t> out = argmax_cols(net_.infer(reps));
    for (std::size_t& p : out) p = p < classes_.size() ? classes_[p] : classes_.front();
    return out;
  }

 private:
  Network net_;
  std::vector<std::size_t> classes_;
};

inline double accuracy(std::span<const std::size_t> truth, std::span<const std::size_t> pred) {
  if (truth.empty()) fail(ErrorCode::kEmpty, "accuracy of nothing");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

struct LeakageResult {
  double accuracy = 0.0;           // held-out protected-attribute accuracy
  double majority_baseline = 0.0;  // held-out share of the training majority group
};

// Trains a probe for g on a random train_fraction split of the
// representations and scores it on the rest.
inline LeakageResult probe_leakage(const Matrix& reps, const Partition& g,
                                   std::uint64_t split_seed, const ProbeConfig& cfg = {}) {
  if (g.size() != reps.cols()) fail(ErrorCode::kPartitionMismatch, "leakage label count");
  std::size_t present = 0;
  for (const auto& m : g.members()) present += !m.empty();
  if (present < 2) fail(ErrorCode::kSingleGroup, "leakage needs at least two protected groups");

  std::vector<std::size_t> order(reps.cols());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(split_seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::clamp<double>(std::floor(cfg.train_fraction * static_cast<double>(order.size())), 1.0,
                         static_cast<double>(order.size() - 1)));
  std::vector<std::size_t> tr(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> te(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(tr.begin(), tr.end());
  std::sort(te.begin(), te.end());

  const Partition g_tr = g.subset(tr);
  const Partition g_te = g.subset(te);
  const Probe probe(gather_cols(reps, tr), g_tr.labels, cfg);
  const auto pred = probe.predict(gather_cols(reps, te));

  std::vector<std::size_t> counts(g.k, 0);
  for (std::size_t l : g_tr.labels) ++counts[l];
  const std::size_t majority =
      static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  std::size_t hits = 0;
  for (std::size_t l : g_te.labels) hits += l == majority;
  return {accuracy(g_te.labels, pred),
          static_cast<double>(hits) / static_cast<double>(g_te.size())};
}

struct MetricReport {
  double accuracy = 0.0;
  double dp = 0.0;
  double gap_rms = 0.0;
  double leakage = 0.0;
  double leakage_baseline = 0.0;
  std::vector<double> per_class_gaps;
  std::size_t undefined_count = 0;

  nlohmann::json to_json() const {
    return {{"accuracy", accuracy},
            {"dp", dp},
            {"gap_rms", gap_rms},
            {"leakage", leakage},
            {"leakage_baseline", leakage_baseline},
            {"per_class_gaps", per_class_gaps},
            {"undefined_count", undefined_count}};
  }

  static MetricReport from_json(const nlohmann::json& j) {
    MetricReport m;
    m.accuracy = j.at("accuracy").get<double>();
    m.dp = j.at("dp").get<double>();
    m.gap_rms = j.at("gap_rms").get<double>();
    m.leakage = j.at("leakage").get<double>();
    m.leakage_baseline = j.at("leakage_baseline").get<double>();
    m.per_class_gaps = j.at("per_class_gaps").get<std::vector<double>>();
    m.undefined_count = j.at("undefined_count").get<std::size_t>();
    return m;
  }
};

// Gap^RMS and DP for a log with any number of protected groups: the binary
// metrics for the pair (0, 1), or the worst pair when there are more groups.
struct GroupFairness {
  GapSummary gaps;
  double dp = 0.0;
};

inline GroupFairness group_fairness(const PredictionLog& log) {
  GroupFairness out;
  bool first = true;
  for (std::size_t a = 0; a < log.num_groups; ++a) {
    for (std::size_t b = a + 1; b < log.num_groups; ++b) {
      const bool has_a = std::find(log.g.begin(), log.g.end(), a) != log.g.end();
      const bool has_b = std::find(log.g.begin(), log.g.end(), b) != log.g.end();
      if (!has_a || !has_b) continue;
      GapSummary gs = gap_rms(log, a, b);
      const double dp = demographic_parity(log, a, b);
      if (first || gs.rms > out.gaps.rms) out.gaps = std::move(gs);
      if (first || dp > out.dp) out.dp = dp;
      first = false;
    }
  }
  if (first) fail(ErrorCode::kMissingGroup, "fewer than two protected groups in the log");
  return out;
}

}  // namespace rdfair

#endif  // RDFAIR_FAIRNESS_METRICS_HPP_
