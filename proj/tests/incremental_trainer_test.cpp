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


#include "rdfair/incremental_trainer.hpp"

#include <gtest/gtest.h>

#include <random>

#include "rdfair/data.hpp"
#include "rdfair/errors.hpp"
#include "test_util.hpp"

namespace rdfair {
namespace {

using testing::fd_params;
using testing::params_relative_error;
using testing::random_matrix;
using testing::random_partition;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

IncrementalConfig small_config() {
  IncrementalConfig cfg;
  cfg.model.encoder_hidden = {16};
  cfg.model.rep_dim = 8;
  cfg.model.disc_hidden = {8};
  cfg.model.disc_out = 4;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 32;
  cfg.train.seed = 3;
  cfg.sampler.r = 5;
  cfg.probe.epochs = 30;
  return cfg;
}

SplitPair small_data(std::size_t classes = 4, std::size_t per_class = 40) {
  BiasSpec spec;
  spec.num_classes = classes;
  spec.samples_per_class = per_class;
  spec.test_samples_per_class = 20;
  spec.feature_dim = 8;
  spec.seed = 2;
  return generate_synthetic(spec);
}

// A store over random exemplars frozen with a different encoder, so that the
// retention term is away from its minimum.
ExemplarStore random_store(std::size_t in_dim, std::size_t rep_dim, std::size_t n,
                           std::mt19937_64& rng) {
  ExemplarStore store(3, 2);
  const Partition y = random_partition(n, 3, rng);
  const Partition g = random_partition(n, 2, rng);
  store.append(random_matrix(in_dim, n, rng), y.labels, g.labels);
  store.refreeze(Network::mlp({in_dim, 5, rep_dim}, 999, LayerKind::kTanh));
  return store;
}

TEST(StagePlan, DescendingSizeWithStableTies) {
  const std::vector<std::size_t> sizes{10, 30, 20, 30, 5};
  const StagePlan plan = make_plan(sizes, 2, ClassOrder::kDescendingSize);
  EXPECT_EQ(plan.stages, (std::vector<std::vector<std::size_t>>{{1, 3}, {2, 0}, {4}}));
  EXPECT_EQ(plan.total_stages(), 3u);
}

TEST(StagePlan, GivenAndRandomOrders) {
  const std::vector<std::size_t> sizes(4, 1);
  const std::vector<std::size_t> given{2, 0, 3, 1};
  EXPECT_EQ(make_plan(sizes, 2, ClassOrder::kGiven, given).stages,
            (std::vector<std::vector<std::size_t>>{{2, 0}, {3, 1}}));
  EXPECT_EQ(make_plan(sizes, 1, ClassOrder::kRandom, {}, 5).stages,
            make_plan(sizes, 1, ClassOrder::kRandom, {}, 5).stages);
  const std::vector<std::size_t> dup{0, 0, 1, 2};
  EXPECT_EQ(code_of([&] { make_plan(sizes, 2, ClassOrder::kGiven, dup); }),
            ErrorCode::kPlanMismatch);
}

TEST(StagePlan, ValidationBounds) {
  StagePlan plan{{{0, 1}, {2, 3}}, 2, 4};
  EXPECT_NO_THROW(plan.validate());
  plan.num_classes = 5;
  EXPECT_EQ(code_of([&] { plan.validate(); }), ErrorCode::kPlanMismatch);
  StagePlan overlapping{{{0, 1}, {1, 2}}, 2, 3};
  EXPECT_EQ(code_of([&] { overlapping.validate(); }), ErrorCode::kPlanMismatch);
  StagePlan extra{{{0, 1}, {2}, {}}, 2, 3};
  EXPECT_EQ(code_of([&] { extra.validate(); }), ErrorCode::kPlanMismatch);
}

TEST(IncrementalStep, EmptyStoreReducesToEncoderStep) {
  std::mt19937_64 rng(1);
  const LabeledBatch batch{random_matrix(6, 24, rng), random_partition(24, 3, rng),
                           random_partition(24, 2, rng)};
  const Network disc = Network::mlp({4, 5, 3}, 2);
  IncrementalConfig cfg;
  for (double beta : {0.0, 1.0}) {
    cfg.train.beta = beta;
    Network a = Network::mlp({6, 7, 4}, 1), b = a;
    const ExemplarStore empty(3, 2);
    const EncoderReport ra = incremental_encoder_step(a, disc, batch, empty, cfg);
    const EncoderReport rb = encoder_step(b, disc, batch, cfg.train);
    EXPECT_TRUE(a == b);
    EXPECT_EQ(ra.objective, rb.objective);
    EXPECT_EQ(ra.term_c, 0.0);
    EXPECT_EQ(ra.term_d, 0.0);
  }
}

TEST(IncrementalStep, ZeroRetentionWeightsIgnoreExemplars) {
  std::mt19937_64 rng(2);
  const LabeledBatch batch{random_matrix(6, 24, rng), random_partition(24, 3, rng),
                           random_partition(24, 2, rng)};
  const ExemplarStore store = random_store(6, 4, 12, rng);
  const Network disc = Network::mlp({4, 5, 3}, 2);
  IncrementalConfig cfg;
  cfg.gamma = 0.0;
  cfg.eta = 0.0;
  Network a = Network::mlp({6, 7, 4}, 1), b = a;
  const EncoderReport with = incremental_encoder_step(a, disc, batch, store, cfg);
  incremental_encoder_step(b, disc, batch, ExemplarStore(3, 2), cfg);
  EXPECT_TRUE(a == b);
  EXPECT_GT(with.r_old, 0.0);
  EXPECT_GT(with.term_c, 0.0);
}

TEST(IncrementalStep, FourTermGradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    std::mt19937_64 rng(100 + s);
    const std::size_t n = 6 + s % 10;
    const LabeledBatch batch{random_matrix(3, n, rng), random_partition(n, 3, rng),
                             random_partition(n, 2, rng)};
    const ExemplarStore store = random_store(3, 3, 5 + s % 6, rng);
    Network phi = Network::mlp({3, 4, 3}, s, LayerKind::kTanh);
    const Network disc = Network::mlp({3, 3, 2}, 500 + s, LayerKind::kTanh);
    const detail::ObjectiveWeights w{0.7, 0.5, 0.3};
    const RateConfig rcfg;
    const auto obj = detail::encoder_objective(phi, disc, batch, store.view(), w, rcfg);
    EXPECT_NE(obj.report.term_c, 0.0);
    const ParamGrads fd = fd_params(phi, [&] {
      return detail::encoder_objective(phi, disc, batch, store.view(), w, rcfg).report.objective;
    });
    EXPECT_LE(params_relative_error(obj.grads, fd), 1e-5) << "seed " << s;
  }
}

TEST(IncrementalStep, StaleStore) {
  std::mt19937_64 rng(3);
  const LabeledBatch batch{random_matrix(6, 10, rng), random_partition(10, 3, rng),
                           random_partition(10, 2, rng)};
  ExemplarStore store = random_store(6, 5, 8, rng);
  Network phi = Network::mlp({6, 7, 4}, 1);
  const Network disc = Network::mlp({4, 5, 3}, 2);
  EXPECT_EQ(code_of([&] { incremental_encoder_step(phi, disc, batch, store, {}); }),
            ErrorCode::kStaleStore);
  store.refreeze(phi);
  EXPECT_NO_THROW(incremental_encoder_step(phi, disc, batch, store, {}));
  store.append(random_matrix(6, 2, rng), std::vector<std::size_t>{0, 1},
               std::vector<std::size_t>{0, 0});
  EXPECT_EQ(code_of([&] { incremental_encoder_step(phi, disc, batch, store, {}); }),
            ErrorCode::kStaleStore);
}

TEST(RunStage, SingleStageMatchesJointTraining) {
  const SplitPair data = small_data();
  const LabeledBatch batch = data.train.batch();
  const IncrementalConfig cfg = small_config();
  Network p1 = cfg.model.make_encoder(8, 1), d1 = cfg.model.make_discriminator(2);
  Network p2 = p1, d2 = d1;
  const StageTraining st = run_stage(p1, d1, batch, ExemplarStore(4, 2), cfg, 0);
  const auto joint = train_debias(p2, d2, batch, cfg.train);
  EXPECT_TRUE(p1 == p2);
  EXPECT_TRUE(d1 == d2);
  ASSERT_EQ(st.telemetry.size(), joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i)
    EXPECT_EQ(st.telemetry[i].to_json(), joint[i].to_json());
}

TEST(RunStage, EmptyStage) {
  const IncrementalConfig cfg = small_config();
  Network phi = cfg.model.make_encoder(8, 1), disc = cfg.model.make_discriminator(2);
  EXPECT_EQ(code_of([&] {
              run_stage(phi, disc, LabeledBatch{Matrix(8, 0), {}, {}}, ExemplarStore(4, 2), cfg, 0);
            }),
            ErrorCode::kEmptyStage);
}

TEST(RunStage, FrozenStoreUnchangedAndTelemetryTracksOldRate) {
  const SplitPair data = small_data();
  const IncrementalConfig cfg = small_config();
  Network phi = cfg.model.make_encoder(8, 1), disc = cfg.model.make_discriminator(2);
  ExemplarStore store(4, 2);
  const LabeledBatch first = data.train.subset(data.train.indices_of_classes(std::vector<std::size_t>{0, 1})).batch();
  const LabeledBatch second = data.train.subset(data.train.indices_of_classes(std::vector<std::size_t>{2, 3})).batch();
  run_stage(phi, disc, first, store, cfg, 0);
  finish_stage(phi, first, store, cfg, 0);
  const std::uint64_t before = store.fingerprint();
  const auto st = run_stage(phi, disc, second, store, cfg, 1, 100);
  EXPECT_EQ(store.fingerprint(), before);
  EXPECT_EQ(st.telemetry.front().iter, 100u);
  for (const auto& rec : st.telemetry) {
    EXPECT_TRUE(rec.has_exemplars);
    EXPECT_GT(rec.enc.r_old, 0.0);
  }
}

TEST(FinishStage, FreshlyFrozenStoreHasZeroSimilarity) {
  const SplitPair data = small_data();
  IncrementalConfig cfg = small_config();
  const Network phi = cfg.model.make_encoder(8, 4);
  ExemplarStore store(4, 2);
  const LabeledBatch first = data.train.subset(data.train.indices_of_classes(std::vector<std::size_t>{0, 1})).batch();
  finish_stage(phi, first, store, cfg, 0);
  EXPECT_EQ(store.size(), 10u);
  EXPECT_EQ(store.classes(), (std::vector<std::size_t>{0, 1}));
  const Matrix z = encode_normalized(phi, store.x());
  EXPECT_NEAR(subspace_similarity(z, store.z_frozen(), store.y(), store.y(), cfg.train.rate), 0.0,
              1e-9);
}

TEST(FinishStage, WholeClassWhenSmallerThanBudget) {
  const SplitPair data = small_data(2, 7);
  IncrementalConfig cfg = small_config();
  cfg.sampler.r = 20;
  const Network phi = cfg.model.make_encoder(8, 4);
  ExemplarStore store(2, 2);
  finish_stage(phi, data.train.batch(), store, cfg, 0);
  EXPECT_EQ(store.size(), 14u);
  EXPECT_EQ(store.x(), data.train.features);
}

TEST(FinishStage, PrototypeAndSubmodularSamplers) {
  const SplitPair data = small_data();
  for (auto kind : {SamplerKind::kPrototype, SamplerKind::kSubmodular}) {
    IncrementalConfig cfg = small_config();
    cfg.sampler.kind = kind;
    cfg.sampler.k_eigen = 2;
    const Network phi = cfg.model.make_encoder(8, 4);
    ExemplarStore store(4, 2);
    finish_stage(phi, data.train.batch(), store, cfg, 0);
    EXPECT_EQ(store.size(), 20u);
  }
}

TEST(RunExperiment, SingleStageEqualsJointTraining) {
  const SplitPair data = small_data();
  const IncrementalConfig cfg = small_config();
  const StagePlan plan = make_plan(data.train.class_sizes(), 4, ClassOrder::kDescendingSize);
  Network captured;
  const ExperimentResult res =
      run_experiment(data.train, data.test, plan, cfg,
                     [&](const StageReport&, const std::vector<TelemetryRecord>&,
                         const Network& phi, const Network&) { captured = phi; });
  Network phi = cfg.model.make_encoder(8, cfg.train.seed);
  Network disc = cfg.model.make_discriminator(cfg.train.seed + 1);
  train_debias(phi, disc, data.train.batch(), cfg.train);
  EXPECT_TRUE(captured == phi);
  ASSERT_EQ(res.reports.size(), 1u);
  EXPECT_EQ(res.summary.accuracy.last, res.summary.accuracy.average);
}

TEST(RunExperiment, FiveStagesBookkeeping) {
  const SplitPair data = small_data(10, 20);
  IncrementalConfig cfg = small_config();
  cfg.train.epochs = 1;
  const StagePlan plan = make_plan(data.train.class_sizes(), 2, ClassOrder::kDescendingSize);
  const ExperimentResult res = run_experiment(data.train, data.test, plan, cfg);
  ASSERT_EQ(res.reports.size(), 5u);
  for (std::size_t t = 0; t < 5; ++t) {
    const StageReport& r = res.reports[t];
    EXPECT_EQ(r.unseen_count, 10 - 2 * (t + 1));
    EXPECT_EQ(r.exemplar_count, 5 * 2 * (t + 1));
    EXPECT_EQ(r.seen_classes.size(), 2 * (t + 1));
    EXPECT_EQ(r.old_class_accuracy.has_value(), t > 0);
    EXPECT_EQ(r.old_probe_accuracy.has_value(), t > 0);
    if (r.old_probe_accuracy) {
      EXPECT_GE(*r.old_probe_accuracy, 0.0);
      EXPECT_LE(*r.old_probe_accuracy, 1.0);
    }
    EXPECT_GE(r.metrics.accuracy, 0.0);
    EXPECT_LE(r.metrics.accuracy, 1.0);
  }
}

TEST(RunExperiment, Deterministic) {
  const SplitPair data = small_data();
  const IncrementalConfig cfg = small_config();
  const StagePlan plan = make_plan(data.train.class_sizes(), 2, ClassOrder::kDescendingSize);
  const ExperimentResult a = run_experiment(data.train, data.test, plan, cfg);
  const ExperimentResult b = run_experiment(data.train, data.test, plan, cfg);
  ASSERT_EQ(a.reports.size(), b.reports.size());
  for (std::size_t t = 0; t < a.reports.size(); ++t)
    EXPECT_EQ(a.reports[t].to_json().dump(), b.reports[t].to_json().dump());
  EXPECT_EQ(a.summary.to_json(), b.summary.to_json());
}

TEST(RunExperiment, PlanMismatch) {
  const SplitPair data = small_data();
  const IncrementalConfig cfg = small_config();
  const std::vector<std::size_t> sizes(5, 1);
  const StagePlan plan = make_plan(sizes, 2, ClassOrder::kDescendingSize);
  EXPECT_EQ(code_of([&] { run_experiment(data.train, data.test, plan, cfg); }),
            ErrorCode::kPlanMismatch);
}

TEST(StageReport, JsonFields) {
  const SplitPair data = small_data();
  const IncrementalConfig cfg = small_config();
  const StagePlan plan = make_plan(data.train.class_sizes(), 2, ClassOrder::kDescendingSize);
  const ExperimentResult res = run_experiment(data.train, data.test, plan, cfg);
  const auto j = res.reports[1].to_json();
  for (const char* key : {"stage", "new_classes", "seen_classes", "unseen_count", "metrics",
                          "exemplar_count", "store_fingerprint", "final_epoch_r_z",
                          "old_class_accuracy", "old_probe_accuracy"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.at("store_fingerprint").get<std::string>().size(), 16u);
}

}  // namespace
}  // namespace rdfair
