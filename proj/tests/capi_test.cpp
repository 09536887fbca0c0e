/* Copyright 2026 The OilSense Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "oilsense/oilsense.h"

#include <cstring>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oilsense/relnet.hpp"
#include "test_util.hpp"

namespace {

constexpr char kRules[] = R"(OilArea(A) <- SuspectedArea(A) & Ground(B) & On(A, B) @ [0.645, 0.181, 0.162, 0.012].
OilArea(A) <- SuspectedArea(A) & OilStorageDevice(B) & Around(A, B) @ [0.390, 0.323, 0.247, 0.040].
)";

constexpr char kScene[] = R"({"width": 320, "height": 240, "objects": [
  {"id": 4, "class": "suspected_area", "score": 1.0, "bbox": [100, 130, 140, 150],
   "polygon": [[100, 130], [140, 130], [140, 150], [100, 150]]},
  {"id": 9, "class": "ground", "score": 1.0, "bbox": [0, 150, 320, 240],
   "polygon": [[0, 150], [320, 150], [320, 240], [0, 240]]}]})";

std::string Take(char* s) {
  std::string out = s ? s : "";
  os_string_free(s);
  return out;
}

std::string WriteConstantModel(const std::filesystem::path& dir) {
  oilsense::relnet::RelNetConfig c;
  c.grid = 12;
  c.conv1_filters = c.conv2_filters = 2;
  c.fc1_width = c.fc2_width = 4;
  auto p = oilsense::relnet::RelNetParams::Zeros(c);
  p.head_b.data[0] = 40.0;
  const std::string path = (dir / "above.json").string();
  oilsense::relnet::SaveParams(p, path);
  return path;
}

TEST(CApiTest, VersionAndNullArguments) {
  EXPECT_STREQ(os_version(), "1.0.0");
  os_scene* s = nullptr;
  EXPECT_EQ(os_scene_parse(nullptr, &s), OS_ERR_USAGE);
  EXPECT_NE(std::strstr(os_last_error(), "NULL"), nullptr);
  EXPECT_EQ(os_scene_parse(kScene, nullptr), OS_ERR_USAGE);
  os_scene_free(nullptr);
  os_string_free(nullptr);
}

TEST(CApiTest, SceneRoundTrip) {
  os_scene* s = nullptr;
  ASSERT_EQ(os_scene_parse(kScene, &s), OS_OK);
  EXPECT_EQ(os_scene_object_count(s), 2u);
  char* json = nullptr;
  ASSERT_EQ(os_scene_to_json(s, &json), OS_OK);
  const std::string text = Take(json);
  os_scene* again = nullptr;
  ASSERT_EQ(os_scene_parse(text.c_str(), &again), OS_OK);
  ASSERT_EQ(os_scene_to_json(again, &json), OS_OK);
  EXPECT_EQ(Take(json), text);
  os_scene_free(s);
  os_scene_free(again);

  EXPECT_EQ(os_scene_parse("{", &s), OS_ERR_DATA);
  EXPECT_GT(std::strlen(os_last_error()), 0u);
  EXPECT_EQ(os_scene_load("/nonexistent/scene.json", &s), OS_ERR_DATA);
}

TEST(CApiTest, RulesetEvaluate) {
  const auto dir = oilsense::testing::TempDir("capi_rules");
  os_relnet* net = nullptr;
  ASSERT_EQ(os_relnet_load(WriteConstantModel(dir).c_str(), &net), OS_OK);
  os_scene* s = nullptr;
  ASSERT_EQ(os_scene_parse(kScene, &s), OS_OK);

  int label = -1;
  double probs[3] = {0, 0, 0};
  ASSERT_EQ(os_relnet_predict(net, s, 4, 9, &label, probs), OS_OK);
  EXPECT_EQ(label, 0);
  EXPECT_NEAR(probs[0], 1.0, 1e-12);
  EXPECT_EQ(os_relnet_predict(net, s, 4, 77, &label, nullptr), OS_ERR_DATA);

  os_ruleset* rules = nullptr;
  ASSERT_EQ(os_ruleset_parse(kRules, &rules), OS_OK);
  EXPECT_EQ(os_ruleset_size(rules), 2u);
  double score = -1;
  int fired = -2;
  ASSERT_EQ(os_ruleset_evaluate(rules, s, net, &score, &fired), OS_OK);
  EXPECT_NEAR(score, 1.0, 1e-3);
  EXPECT_EQ(fired, 0);

  char* text = nullptr;
  ASSERT_EQ(os_ruleset_to_text(rules, &text), OS_OK);
  os_ruleset* reparsed = nullptr;
  ASSERT_EQ(os_ruleset_parse(Take(text).c_str(), &reparsed), OS_OK);
  double score2 = -1;
  ASSERT_EQ(os_ruleset_evaluate(reparsed, s, net, &score2, nullptr), OS_OK);
  EXPECT_EQ(score, score2);

  EXPECT_EQ(os_ruleset_set_params(rules, R"({"0": {"weights": [0, 0, 0], "bias": 0.25},
                                              "1": {"weights": [0, 0, 0], "bias": 0.5}})"),
            OS_OK);
  ASSERT_EQ(os_ruleset_evaluate(rules, s, net, &score, &fired), OS_OK);
  EXPECT_EQ(score, 0.25);  // no tank: rule 1 has no binding
  EXPECT_EQ(os_ruleset_set_params(rules, R"({"0": {"weights": [0], "bias": 0}})"), OS_ERR_DATA);

  os_ruleset* bare = nullptr;
  ASSERT_EQ(os_ruleset_parse("OilArea(A) <- SuspectedArea(A).", &bare), OS_OK);
  EXPECT_EQ(os_ruleset_evaluate(bare, s, net, &score, &fired), OS_ERR_USAGE);
  EXPECT_EQ(os_ruleset_parse("OilArea(A) <- Puddle(A).", &bare), OS_ERR_DATA);
  EXPECT_NE(std::strstr(os_last_error(), "1:15:"), nullptr);

  os_ruleset_free(bare);
  os_ruleset_free(rules);
  os_ruleset_free(reparsed);
  os_scene_free(s);
  os_relnet_free(net);
}

TEST(CApiTest, EndToEndCommands) {
  const auto dir = oilsense::testing::TempDir("capi_flow");
  const std::string gen = R"({"seed": 3, "grid": 12, "n_scenes": 30})";
  size_t written = 0;
  ASSERT_EQ(os_generate_pairs(gen.c_str(), 90, dir.string().c_str(), &written), OS_OK) << os_last_error();
  EXPECT_EQ(written, 90u);
  ASSERT_EQ(os_generate_scenes(gen.c_str(), -1, (dir / "scenes").string().c_str(), &written), OS_OK);
  EXPECT_EQ(written, 30u);
  EXPECT_EQ(os_generate_scenes("{\"n_scenes\": \"x\"}", -1, dir.string().c_str(), &written), OS_ERR_USAGE);

  const std::string train = R"({"model": {"grid": 12, "conv1_filters": 2, "conv2_filters": 2,
      "fc1_width": 8, "fc2_width": 8}, "train": {"epochs": 2}})";
  char* csv = nullptr;
  const std::string relnet_path = (dir / "relnet.json").string();
  ASSERT_EQ(os_train_relnet((dir / "pairs.jsonl").string().c_str(), train.c_str(), relnet_path.c_str(), &csv),
            OS_OK)
      << os_last_error();
  EXPECT_EQ(Take(csv).rfind("epoch,", 0), 0u);

  std::ofstream((dir / "leak.rules").string()) << kRules;
  char* summary = nullptr;
  ASSERT_EQ(os_train_rules((dir / "leak.rules").string().c_str(), (dir / "scenes").string().c_str(),
                           relnet_path.c_str(), R"({"steps": 5})", (dir / "params.json").string().c_str(), &summary),
            OS_OK)
      << os_last_error();
  EXPECT_EQ(nlohmann::json::parse(Take(summary)).at("loss_history").size(), 6u);

  std::ofstream((dir / "pipeline.json").string())
      << R"({"rules": "leak.rules", "relnet": "relnet.json", "rule_params": "params.json"})";
  os_pipeline* p = nullptr;
  ASSERT_EQ(os_pipeline_load((dir / "pipeline.json").string().c_str(), &p), OS_OK) << os_last_error();
  os_scene* s = nullptr;
  ASSERT_EQ(os_scene_load((dir / "scenes" / "scene_00000.json").string().c_str(), &s), OS_OK);
  char* report = nullptr;
  ASSERT_EQ(os_pipeline_infer(p, s, &report), OS_OK);
  const auto j = nlohmann::json::parse(Take(report));
  EXPECT_GE(j.at("leak_probability").get<double>(), 0.0);
  char* eval = nullptr;
  char* tables = nullptr;
  ASSERT_EQ(os_pipeline_eval_dir(p, (dir / "scenes").string().c_str(), 0, &eval, &tables), OS_OK);
  EXPECT_EQ(nlohmann::json::parse(Take(eval)).at("scenes"), 30);
  EXPECT_FALSE(Take(tables).empty());
  EXPECT_EQ(os_pipeline_eval_dir(p, (dir / "scenes").string().c_str(), 1, &eval, nullptr), OS_ERR_USAGE);
  os_scene_free(s);
  os_pipeline_free(p);

  EXPECT_EQ(os_pipeline_load((dir / "missing.json").string().c_str(), &p), OS_ERR_USAGE);
}

TEST(CApiTest, EnhanceFile) {
  const auto dir = oilsense::testing::TempDir("capi_enhance");
  std::string pgm = "P5\n8 8\n255\n";
  for (int i = 0; i < 64; ++i) pgm.push_back(static_cast<char>(100 + i % 20));
  std::ofstream((dir / "in.pgm").string(), std::ios::binary) << pgm;
  char* report = nullptr;
  ASSERT_EQ(os_enhance_file((dir / "in.pgm").string().c_str(), (dir / "out.pgm").string().c_str(), 1, 1, 1, &report),
            OS_OK)
      << os_last_error();
  EXPECT_TRUE(nlohmann::json::parse(Take(report)).contains("split"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out.pgm"));
  EXPECT_EQ(os_enhance_file((dir / "none.pgm").string().c_str(), (dir / "o.pgm").string().c_str(), 1, 1, 1, nullptr),
            OS_ERR_DATA);
  EXPECT_EQ(os_enhance_file((dir / "in.pgm").string().c_str(), (dir / "o.pgm").string().c_str(), -1, 1, 1, nullptr),
            OS_ERR_USAGE);
}

}  // namespace
