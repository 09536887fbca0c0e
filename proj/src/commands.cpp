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
#include "oilsense/commands.hpp"

#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "oilsense/error.hpp"
#include "oilsense/image.hpp"
#include "oilsense/pipeline.hpp"
#include "oilsense/scenegen.hpp"

namespace oilsense::commands {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

json ParseObject(std::string_view text, const char* what) {
  if (text.empty()) return json::object();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    ThrowUsage(std::string(what) + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) ThrowUsage(std::string(what) + ": expected an object");
  return j;
}

std::size_t CountFrom(const json& j, const char* key, std::optional<std::size_t> n) {
  if (n) return *n;
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    ThrowUsage(std::string("gen config: ") + key + " must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) ThrowUsage("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace

std::string EnhanceFile(const std::string& in_path, const std::string& out_path, const enhance::Weights& weights) {
  const enhance::EnhanceResult r = enhance::EnhanceImage(ReadPnm(in_path), weights);
  WritePnm(r.image, out_path);
  ojson j = {{"input", in_path},
             {"output", out_path},
             {"weights", {weights.brightness, weights.contrast, weights.detail}},
             {"split", r.report.split},
             {"rbd", r.report.metrics.rbd},
             {"rcd", r.report.metrics.rcd},
             {"asd", r.report.metrics.asd},
             {"bps", r.report.scores.bps},
             {"ocs", r.report.scores.ocs},
             {"dps", r.report.scores.dps},
             {"aggregate", r.report.aggregate}};
  return j.dump(2);
}

std::size_t GenerateScenes(std::string_view gen_config_json, std::optional<std::size_t> n,
                           const std::string& out_dir) {
  const json j = ParseObject(gen_config_json, "gen config");
  const scenegen::GenConfig cfg = scenegen::ParseGenConfigJson(j.dump());
  const std::size_t count = CountFrom(j, "n_scenes", n);
  EnsureDir(out_dir);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%05zu.json", i);
    SaveSceneFile(scenegen::GenScene(cfg, i), (fs::path(out_dir) / name).string());
  }
  return count;
}

std::size_t GeneratePairs(std::string_view gen_config_json, std::optional<std::size_t> n,
                          const std::string& out_dir) {
  const json j = ParseObject(gen_config_json, "gen config");
  const scenegen::GenConfig cfg = scenegen::ParseGenConfigJson(j.dump());
  const std::size_t count = CountFrom(j, "n_pairs", n);
  std::size_t grid = 28;
  if (auto it = j.find("grid"); it != j.end()) {
    if (!it->is_number_unsigned() || it->get<std::size_t>() < 8 || it->get<std::size_t>() % 2) {
      ThrowUsage("gen config: grid must be an even integer >= 8");
    }
    grid = it->get<std::size_t>();
  }
  const auto pairs = scenegen::GenPairDataset(cfg, count, grid);
  EnsureDir(out_dir);
  scenegen::WritePairsJsonl(pairs, (fs::path(out_dir) / "pairs.jsonl").string());
  return pairs.size();
}

RelTrainSpec ParseRelTrainSpec(std::string_view text) {
  const json j = ParseObject(text, "train config");
  RelTrainSpec s;
  try {
    if (auto m = j.find("model"); m != j.end()) {
      s.model.grid = m->value("grid", s.model.grid);
      s.model.conv1_filters = m->value("conv1_filters", s.model.conv1_filters);
      s.model.conv2_filters = m->value("conv2_filters", s.model.conv2_filters);
      s.model.fc1_width = m->value("fc1_width", s.model.fc1_width);
      s.model.fc2_width = m->value("fc2_width", s.model.fc2_width);
      if (auto v = m->find("variant"); v != m->end()) s.model.variant = relnet::ParseVariantName(v->get<std::string>());
      s.init_seed = m->value("init_seed", s.init_seed);
    }
    if (auto t = j.find("train"); t != j.end()) {
      s.train.lr_initial = t->value("lr_initial", s.train.lr_initial);
      s.train.lr_final = t->value("lr_final", s.train.lr_final);
      if (auto p = t->find("lr_policy"); p != t->end()) {
        const std::string name = p->get<std::string>();
        if (name == "constant") {
          s.train.lr_policy = relnet::LrPolicy::kConstant;
        } else if (name == "linear") {
          s.train.lr_policy = relnet::LrPolicy::kLinear;
        } else {
          ThrowUsage("train config: lr_policy must be constant or linear");
        }
      }
      s.train.epochs = t->value("epochs", s.train.epochs);
      s.train.batch_size = t->value("batch_size", s.train.batch_size);
      s.train.momentum = t->value("momentum", s.train.momentum);
      s.train.weight_decay = t->value("weight_decay", s.train.weight_decay);
      s.train.seed = t->value("seed", s.train.seed);
    }
  } catch (const json::exception& e) {
    ThrowUsage(std::string("train config: ") + e.what());
  } catch (const Error& e) {
    ThrowUsage(std::string("train config: ") + e.what());
  }
  s.model.Validate();
  s.train.Validate();
  return s;
}

std::string TrainRelnet(const std::string& pairs_path, std::string_view spec_json, const std::string& out_path) {
  const RelTrainSpec spec = ParseRelTrainSpec(spec_json);
  const auto pairs = scenegen::ReadPairsJsonl(pairs_path);
  std::vector<relnet::PairSample> samples;
  samples.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.sample.raster.width() != spec.model.grid) {
      ThrowData(pairs_path + ": pair grid " + std::to_string(p.sample.raster.width()) +
                " does not match model grid " + std::to_string(spec.model.grid));
    }
    samples.push_back(p.sample);
  }
  const relnet::TrainResult r =
      relnet::Train(relnet::InitParams(spec.model, spec.init_seed), samples, spec.train);
  relnet::SaveParams(r.params, out_path);
  return relnet::LossHistoryCsv(r.history);
}

logic::RuleTrainConfig ParseRuleTrainConfig(std::string_view text) {
  const json j = ParseObject(text, "rule train config");
  logic::RuleTrainConfig c;
  try {
    c.lr = j.value("lr", c.lr);
    c.steps = j.value("steps", c.steps);
    c.momentum = j.value("momentum", c.momentum);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    ThrowUsage(std::string("rule train config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::string TrainRules(const std::string& rules_path, const std::string& scenes_dir, const std::string& relnet_path,
                       std::string_view config_json, const std::string& out_path) {
  const logic::RuleTrainConfig cfg = ParseRuleTrainConfig(config_json);
  std::vector<logic::ParsedRule> parsed;
  try {
    parsed = logic::ParseRules(pipeline::ReadTextFile(rules_path));
  } catch (const Error& e) {
    throw Error(e.kind(), rules_path + ":" + e.what());
  }
  if (parsed.empty()) ThrowData(rules_path + ": no rules");
  std::vector<logic::RuleAST> rules;
  bool all_inline = true;
  for (const auto& pr : parsed) {
    rules.push_back(pr.rule);
    all_inline = all_inline && pr.params.has_value();
  }
  std::vector<logic::RuleParams> initial;
  if (all_inline) {
    for (const auto& pr : parsed) initial.push_back(*pr.params);
  } else {
    initial = logic::InitRuleParams(rules, cfg.seed);
  }
  const auto corpus = pipeline::LoadSceneDir(scenes_dir);
  const auto model = relnet::LoadParams(relnet_path);
  const logic::RuleTrainResult r = pipeline::TrainRulesOnCorpus(rules, std::move(initial), corpus, model, cfg);
  pipeline::WriteTextFile(out_path, logic::SerializeRuleParams(r.params));
  ojson summary = {{"rules", rules.size()},
                   {"scenes", corpus.size()},
                   {"seed", cfg.seed},
                   {"initial_loss", r.loss_history.front()},
                   {"final_loss", r.loss_history.back()},
                   {"loss_history", r.loss_history}};
  return summary.dump(2);
}

}  // namespace oilsense::commands
