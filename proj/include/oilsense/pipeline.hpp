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
#ifndef OILSENSE_PIPELINE_HPP_
#define OILSENSE_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oilsense/enhance.hpp"
#include "oilsense/logic.hpp"
#include "oilsense/metrics.hpp"
#include "oilsense/relnet.hpp"
#include "oilsense/scene.hpp"

namespace oilsense::pipeline {

struct PipelineConfig {
  std::string rules_path;
  std::string relnet_path;
  std::optional<std::string> rule_params_path;  // else inline "@ [...]" params
  bool enhance_enabled = false;
  enhance::Weights enhance_weights;
  double threshold = 0.5;
  std::vector<double> iou_grid = metrics::DefaultIouGrid();
  std::optional<std::string> relnet_position_path;
  std::optional<std::string> relnet_position_type_path;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Relative paths are resolved against `base_dir`.
PipelineConfig ParsePipelineConfig(std::string_view text, const std::string& base_dir = "");
PipelineConfig LoadPipelineConfig(const std::string& path);
std::string PipelineConfigToJson(const PipelineConfig& cfg);
// FNV-1a over the canonical JSON form, hex encoded.
std::string ConfigHash(const PipelineConfig& cfg);

// Relation probabilities for every ordered pair (including self pairs).
logic::RelationTable ClassifyPairs(const relnet::RelNetParams& model, const Scene& scene);

struct PairRelation {
  int subject_id;
  int reference_id;
  relnet::RelationLabel label;
  std::array<double, relnet::kNumRelations> probabilities;
};

struct InferenceReport {
  double leak_probability = 0.0;
  bool decision = false;
  std::optional<std::size_t> fired_rule;
  std::string fired_rule_text;
  std::optional<logic::GroundingContext> binding;
  std::vector<double> rule_scores;
  std::vector<PairRelation> relations;
  std::optional<enhance::EnhanceReport> enhancement;
};

struct BinaryEval {
  metrics::ClassificationReport report;  // classes: 0 normal, 1 leak
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct RelationAblationRow {
  relnet::InputVariant variant;
  metrics::ClassificationReport report;  // classes: Above, Nearby, Other
};

struct EvalReport {
  std::size_t scenes = 0;
  BinaryEval full;
  BinaryEval baseline;  // max suspected-area confidence >= threshold
  metrics::ApSummary oil_area_ap;
  bool object_labels = false;  // AP is only meaningful when true
  std::vector<RelationAblationRow> relation_ablation;
};

class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::vector<logic::RuleAST> rules, std::vector<logic::RuleParams> params,
           relnet::RelNetParams relnet);

  // Loads every file named by the config.
  static Pipeline Load(const PipelineConfig& cfg);

  const PipelineConfig& config() const { return cfg_; }
  const std::vector<logic::RuleAST>& rules() const { return rules_; }
  const std::vector<logic::RuleParams>& params() const { return params_; }
  const relnet::RelNetParams& relnet() const { return relnet_; }

  // Adds relation classifiers trained on reduced inputs for the ablation table.
  void SetAblationModels(relnet::RelNetParams position, relnet::RelNetParams position_type);

  InferenceReport RunInference(const Scene& scene) const;
  // Throws Error(kData) if any scene lacks leak_label. The relation
  // ablation runs only when `ablations` is set and models are present.
  EvalReport RunEval(const std::vector<Scene>& corpus, bool ablations) const;

  std::string InferenceReportJson(const InferenceReport& report) const;
  std::string EvalReportJson(const EvalReport& report) const;

 private:
  PipelineConfig cfg_;
  std::vector<logic::RuleAST> rules_;
  std::vector<logic::RuleParams> params_;
  relnet::RelNetParams relnet_;
  std::optional<relnet::RelNetParams> relnet_position_;
  std::optional<relnet::RelNetParams> relnet_position_type_;
};

// Aligned plain-text rendering of the two ablation tables.
std::string RenderEvalTables(const EvalReport& report);

// Loads rules and resolves their parameters (inline or from a file).
struct Ruleset {
  std::vector<logic::RuleAST> rules;
  std::vector<logic::RuleParams> params;
};
Ruleset LoadRuleset(const std::string& rules_path, const std::optional<std::string>& params_path);

// Scene files (*.json) in a directory, sorted by file name.
std::vector<Scene> LoadSceneDir(const std::string& dir);

// Grounds each labelled scene with `model` and trains the rule weights.
logic::RuleTrainResult TrainRulesOnCorpus(const std::vector<logic::RuleAST>& rules,
                                          std::vector<logic::RuleParams> initial,
                                          const std::vector<Scene>& corpus,
                                          const relnet::RelNetParams& model,
                                          const logic::RuleTrainConfig& cfg);

std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, std::string_view text);

}  // namespace oilsense::pipeline

#endif  // OILSENSE_PIPELINE_HPP_
