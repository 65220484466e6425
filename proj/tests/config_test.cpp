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


#include "rdfair/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rdfair/errors.hpp"

namespace rdfair {
namespace {

namespace fs = std::filesystem;

std::string config_error(const nlohmann::json& j) {
  try {
    ExperimentConfig::from_json(j).validate(true);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    return e.what();
  }
  return "";
}

bool mentions(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

TEST(Config, DefaultsValidate) {
  EXPECT_NO_THROW(ExperimentConfig{}.validate(true));
  EXPECT_EQ(config_error(nlohmann::json::object()), "");
}

TEST(Config, RoundTripIsFixedPoint) {
  const nlohmann::json j = nlohmann::json::parse(R"({
    "name": "rt", "seed": 11, "checkpoints": false,
    "dataset": {"kind": "synthetic", "synthetic": {"p": 0.8, "num_classes": 6}},
    "plan": {"classes_per_stage": 3, "order": "given", "classes": [5, 4, 3, 2, 1, 0]},
    "train": {"beta": 0.5, "epsilon_sq": 0.5, "epochs": 3},
    "incremental": {"gamma": 0.25, "eta": 2, "disc_on_exemplars": true},
    "sampler": {"kind": "submodular", "r": 7},
    "model": {"encoder_hidden": [32, 16], "rep_dim": 12},
    "probe": {"epochs": 50, "max_train_samples": 100}
  })");
  const ExperimentConfig a = ExperimentConfig::from_json(j);
  const nlohmann::json once = a.to_json();
  const nlohmann::json twice = ExperimentConfig::from_json(once).to_json();
  EXPECT_EQ(once, twice);
  EXPECT_EQ(a.seed, 11u);
  EXPECT_EQ(a.plan.order, ClassOrder::kGiven);
  EXPECT_EQ(a.incremental.sampler.kind, SamplerKind::kSubmodular);
  EXPECT_EQ(a.incremental.model.encoder_hidden, (std::vector<std::size_t>{32, 16}));
  EXPECT_EQ(a.resolved().train.seed, 11u);
  EXPECT_EQ(a.resolved().train.beta, 0.5);
}

TEST(Config, NegativeBetaNamesField) {
  const std::string msg = config_error({{"train", {{"beta", -1.0}}}});
  EXPECT_TRUE(mentions(msg, "train.beta")) << msg;
}

TEST(Config, RangeErrorsNameFields) {
  EXPECT_TRUE(mentions(config_error({{"incremental", {{"gamma", -0.5}}}}), "incremental.gamma"));
  EXPECT_TRUE(mentions(config_error({{"train", {{"epsilon_sq", 0.0}}}}), "train.epsilon_sq"));
  EXPECT_TRUE(mentions(config_error({{"probe", {{"train_fraction", 1.0}}}}), "probe.train_fraction"));
  EXPECT_TRUE(mentions(config_error({{"dataset", {{"synthetic", {{"p", 2.0}}}}}}),
                       "dataset.synthetic.p"));
  EXPECT_TRUE(mentions(config_error({{"sampler", {{"r", 0}}}}), "sampler.r"));
  EXPECT_TRUE(mentions(config_error({{"sampler", {{"r", -3}}}}), "sampler.r"));
}

TEST(Config, UnknownKeysAndWrongTypes) {
  EXPECT_TRUE(mentions(config_error({{"trian", {{"beta", 1}}}}), "trian: unknown key"));
  EXPECT_TRUE(mentions(config_error({{"train", {{"betta", 1}}}}), "train.betta: unknown key"));
  EXPECT_TRUE(mentions(config_error({{"train", {{"beta", "high"}}}}), "train.beta: wrong type"));
  EXPECT_TRUE(mentions(config_error({{"sampler", {{"kind", "greedy"}}}}), "sampler.kind"));
}

TEST(Config, MissingFilesAreReported) {
  const nlohmann::json j = {{"dataset", {{"kind", "csv"}, {"csv", {{"train", "/nope/a.csv"},
                                                                   {"test", "/nope/b.csv"}}}}}};
  EXPECT_TRUE(mentions(config_error(j), "dataset.csv.train"));
  EXPECT_NO_THROW(ExperimentConfig::from_json(j).validate(false));
  const nlohmann::json idx = {{"dataset", {{"kind", "idx"}}}};
  EXPECT_TRUE(mentions(config_error(idx), "dataset.idx.train_images"));
}

TEST(Config, GivenOrderNeedsClasses) {
  EXPECT_TRUE(mentions(config_error({{"plan", {{"order", "given"}}}}), "plan.classes"));
}

TEST(Config, LoadAllowsComments) {
  const fs::path p = fs::temp_directory_path() / "rdfair_config_test.json";
  std::ofstream(p) << "{\n  // a comment\n  \"name\": \"c\", /* inline */ \"seed\": 4\n}\n";
  const ExperimentConfig c = load_config(p.string());
  EXPECT_EQ(c.name, "c");
  EXPECT_EQ(c.seed, 4u);
  std::ofstream(p) << "{ \"name\": ";
  try {
    load_config(p.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
  try {
    load_config("/nonexistent/config.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(Config, ShippedConfigsValidate) {
  for (const auto& entry : fs::directory_iterator(fs::path(RDFAIR_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(entry.path().string()).validate(false)) << entry.path();
  }
}

TEST(SetDotted, ParsesLiteralsAndCreatesPath) {
  nlohmann::json doc = {{"train", {{"beta", 1.0}}}};
  set_dotted(doc, "train.beta", "0");
  set_dotted(doc, "sampler.kind", "prototype");
  set_dotted(doc, "model.encoder_hidden", "[8,4]");
  set_dotted(doc, "checkpoints", "false");
  EXPECT_EQ(doc["train"]["beta"], 0);
  EXPECT_EQ(doc["sampler"]["kind"], "prototype");
  EXPECT_EQ(doc["model"]["encoder_hidden"], nlohmann::json::array({8, 4}));
  EXPECT_EQ(doc["checkpoints"], false);
  EXPECT_EQ(ExperimentConfig::from_json(doc).incremental.sampler.kind, SamplerKind::kPrototype);
}

TEST(SetDotted, MalformedKeys) {
  nlohmann::json doc = {{"name", "x"}};
  for (const char* key : {"", "train..beta", "name.inner"}) {
    try {
      set_dotted(doc, key, "1");
      FAIL() << key;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    }
  }
}

}  // namespace
}  // namespace rdfair
