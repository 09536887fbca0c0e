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
#include "oilsense/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "oilsense/error.hpp"
#include "oilsense/image.hpp"
#include "oilsense/scenegen.hpp"

namespace oilsense::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string Resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

std::optional<std::string> OptionalPath(const json& j, const char* key, const std::string& base) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) ThrowUsage(std::string("pipeline config: ") + key + " must be a path");
  return Resolve(base, it->get<std::string>());
}

ojson EnhanceReportJson(const enhance::EnhanceReport& r) {
  return {{"split", r.split},
          {"rbd", r.metrics.rbd},
          {"rcd", r.metrics.rcd},
          {"asd", r.metrics.asd},
          {"bps", r.scores.bps},
          {"ocs", r.scores.ocs},
          {"dps", r.scores.dps},
          {"aggregate", r.aggregate}};
}

ojson ScoresJson(const metrics::ClassScores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
}

ojson BinaryJson(const BinaryEval& b) {
  return {{"normal", ScoresJson(b.report.per_class[0])},
          {"leak", ScoresJson(b.report.per_class[1])},
          {"total", ScoresJson(b.report.total)},
          {"accuracy", b.report.accuracy},
          {"confusion", {{"tp", b.tp}, {"fp", b.fp}, {"tn", b.tn}, {"fn", b.fn}}}};
}

BinaryEval EvaluateBinary(const std::vector<int>& truth, const std::vector<int>& pred) {
  BinaryEval b;
  b.report = metrics::Classify(truth, pred, 2);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] && pred[i]) ++b.tp;
    if (!truth[i] && pred[i]) ++b.fp;
    if (!truth[i] && !pred[i]) ++b.tn;
    if (truth[i] && !pred[i]) ++b.fn;
  }
  return b;
}

std::string Fixed(double v, int width = 8) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%*.3f", width, v);
  return buf;
}

std::string Pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

// Runs fn(i) for i in [0, n) on worker threads. Each index is handled by
// exactly one worker, so callers writing to slot i get a fixed merge order.
template <typename Fn>
void ParallelFor(std::size_t n, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct SceneOutcome {
  double leak_probability = 0.0;
  double max_confidence = 0.0;
  std::map<int, logic::FuzzyValue> head;
};

}  // namespace

void PipelineConfig::Validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) ThrowUsage("pipeline config: threshold must be in (0, 1)");
  if (rules_path.empty()) ThrowUsage("pipeline config: rules path is required");
  if (relnet_path.empty()) ThrowUsage("pipeline config: relnet path is required");
  for (double t : iou_grid) {
    if (!(t > 0.0 && t <= 1.0)) ThrowUsage("pipeline config: IoU thresholds must be in (0, 1]");
  }
  if (enhance_weights.brightness < 0 || enhance_weights.contrast < 0 || enhance_weights.detail < 0) {
    ThrowUsage("pipeline config: enhancement weights must be >= 0");
  }
}

PipelineConfig ParsePipelineConfig(std::string_view text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    ThrowUsage(std::string("pipeline config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) ThrowUsage("pipeline config: expected an object");
  PipelineConfig c;
  try {
    c.rules_path = Resolve(base_dir, j.at("rules").get<std::string>());
    c.relnet_path = Resolve(base_dir, j.at("relnet").get<std::string>());
    c.threshold = j.value("threshold", c.threshold);
    c.seed = j.value("seed", c.seed);
    if (auto it = j.find("iou_grid"); it != j.end()) c.iou_grid = it->get<std::vector<double>>();
    if (auto it = j.find("enhance"); it != j.end()) {
      c.enhance_enabled = it->value("enabled", false);
      if (auto w = it->find("weights"); w != it->end()) {
        const auto v = w->get<std::vector<double>>();
        if (v.size() != 3) ThrowUsage("pipeline config: enhance.weights needs 3 values");
        c.enhance_weights = {v[0], v[1], v[2]};
      }
    }
  } catch (const json::exception& e) {
    ThrowUsage(std::string("pipeline config: ") + e.what());
  }
  c.rule_params_path = OptionalPath(j, "rule_params", base_dir);
  if (auto it = j.find("ablation_relnets"); it != j.end() && it->is_object()) {
    c.relnet_position_path = OptionalPath(*it, "position", base_dir);
    c.relnet_position_type_path = OptionalPath(*it, "position_type", base_dir);
  }
  c.Validate();
  return c;
}

PipelineConfig LoadPipelineConfig(const std::string& path) {
  std::string text;
  try {
    text = ReadTextFile(path);
  } catch (const Error& e) {
    ThrowUsage(e.what());
  }
  return ParsePipelineConfig(text, fs::path(path).parent_path().string());
}

std::string PipelineConfigToJson(const PipelineConfig& c) {
  ojson j;
  j["rules"] = c.rules_path;
  j["relnet"] = c.relnet_path;
  j["rule_params"] = c.rule_params_path ? ojson(*c.rule_params_path) : ojson(nullptr);
  j["threshold"] = c.threshold;
  j["seed"] = c.seed;
  j["iou_grid"] = c.iou_grid;
  j["enhance"] = {{"enabled", c.enhance_enabled},
                  {"weights", {c.enhance_weights.brightness, c.enhance_weights.contrast, c.enhance_weights.detail}}};
  j["ablation_relnets"] = {
      {"position", c.relnet_position_path ? ojson(*c.relnet_position_path) : ojson(nullptr)},
      {"position_type", c.relnet_position_type_path ? ojson(*c.relnet_position_type_path) : ojson(nullptr)}};
  return j.dump();
}

std::string ConfigHash(const PipelineConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : PipelineConfigToJson(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

logic::RelationTable ClassifyPairs(const relnet::RelNetParams& model, const Scene& scene) {
  const std::size_t n = scene.objects.size();
  logic::RelationTable table(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const relnet::PairSample s = relnet::MakePairSample(scene.objects[i], scene.objects[j], scene.width,
                                                          scene.height, model.config.grid);
      table.set(i, j, relnet::Predict(model, s).probabilities);
    }
  }
  return table;
}

Pipeline::Pipeline(PipelineConfig cfg, std::vector<logic::RuleAST> rules, std::vector<logic::RuleParams> params,
                   relnet::RelNetParams relnet)
    : cfg_(std::move(cfg)), rules_(std::move(rules)), params_(std::move(params)), relnet_(std::move(relnet)) {
  cfg_.Validate();
  if (rules_.empty()) ThrowUsage("pipeline needs at least one rule");
  logic::CheckRuleParams(rules_, params_);
}

Pipeline Pipeline::Load(const PipelineConfig& cfg) {
  cfg.Validate();
  Ruleset rs = LoadRuleset(cfg.rules_path, cfg.rule_params_path);
  Pipeline p(cfg, std::move(rs.rules), std::move(rs.params), relnet::LoadParams(cfg.relnet_path));
  if (cfg.relnet_position_path && cfg.relnet_position_type_path) {
    p.SetAblationModels(relnet::LoadParams(*cfg.relnet_position_path),
                        relnet::LoadParams(*cfg.relnet_position_type_path));
  }
  return p;
}

void Pipeline::SetAblationModels(relnet::RelNetParams position, relnet::RelNetParams position_type) {
  if (position.config.variant != relnet::InputVariant::kPosition ||
      position_type.config.variant != relnet::InputVariant::kPositionType) {
    ThrowUsage("ablation models must be trained with the position and position_type variants");
  }
  relnet_position_ = std::move(position);
  relnet_position_type_ = std::move(position_type);
}

InferenceReport Pipeline::RunInference(const Scene& scene) const {
  ValidateScene(scene);
  InferenceReport rep;
  if (cfg_.enhance_enabled && scene.image_path) {
    rep.enhancement = enhance::EnhanceImage(ReadPnm(*scene.image_path), cfg_.enhance_weights).report;
  }
  const logic::RelationTable table = ClassifyPairs(relnet_, scene);
  const logic::RulesetEvaluation ev = logic::EvaluateRuleset(rules_, params_, scene, table);
  rep.leak_probability = ev.score.value();
  rep.decision = rep.leak_probability >= cfg_.threshold;
  rep.fired_rule = ev.fired_rule;
  if (ev.fired_rule) rep.fired_rule_text = logic::PrintRule({rules_[*ev.fired_rule], params_[*ev.fired_rule]});
  rep.binding = ev.binding;
  for (const logic::FuzzyValue& v : ev.rule_scores) rep.rule_scores.push_back(v.value());
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    for (std::size_t j = 0; j < scene.objects.size(); ++j) {
      const auto& probs = table.at(i, j);
      rep.relations.push_back(
          {scene.objects[i].id, scene.objects[j].id, relnet::ArgmaxRelation(probs), probs});
    }
  }
  return rep;
}

EvalReport Pipeline::RunEval(const std::vector<Scene>& corpus, bool ablations) const {
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    if (!corpus[s].leak_label) {
      ThrowData("scene " + std::to_string(s) + " has no leak_label; eval needs a labelled corpus");
    }
    ValidateScene(corpus[s]);
  }
  if (ablations && (!relnet_position_ || !relnet_position_type_)) {
    ThrowUsage("relation ablation needs position and position_type models (config ablation_relnets)");
  }

  std::vector<SceneOutcome> outcomes(corpus.size());
  ParallelFor(corpus.size(), [&](std::size_t s) {
    const Scene& scene = corpus[s];
    const logic::RelationTable table = ClassifyPairs(relnet_, scene);
    SceneOutcome& out = outcomes[s];
    out.leak_probability = logic::EvaluateRuleset(rules_, params_, scene, table).score.value();
    for (const DetectedObject& o : scene.objects) {
      if (o.label == ClassLabel::kSuspectedArea) out.max_confidence = std::max(out.max_confidence, o.confidence);
    }
    out.head = logic::HeadScores(rules_, params_, scene, table);
  });

  EvalReport rep;
  rep.scenes = corpus.size();
  std::vector<int> truth, full, base;
  std::vector<metrics::ScoredBox> preds;
  std::vector<metrics::GroundTruthBox> gts;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const Scene& scene = corpus[s];
    truth.push_back(*scene.leak_label ? 1 : 0);
    full.push_back(outcomes[s].leak_probability >= cfg_.threshold ? 1 : 0);
    base.push_back(outcomes[s].max_confidence >= cfg_.threshold ? 1 : 0);
    for (const DetectedObject& o : scene.objects) {
      if (o.leak) rep.object_labels = true;
      if (o.leak.value_or(false)) gts.push_back({static_cast<int>(s), o.bbox});
      const double score = outcomes[s].head.at(o.id).value();
      if (score > 0.0) preds.push_back({static_cast<int>(s), o.bbox, score});
    }
  }
  rep.full = EvaluateBinary(truth, full);
  rep.baseline = EvaluateBinary(truth, base);
  rep.oil_area_ap = metrics::SummarizeAp(preds, gts, cfg_.iou_grid);

  if (!ablations) return rep;
  const std::array<const relnet::RelNetParams*, 3> models = {&*relnet_position_, &*relnet_position_type_, &relnet_};
  std::vector<std::vector<int>> scene_truth(corpus.size());
  std::vector<std::array<std::vector<int>, 3>> scene_pred(corpus.size());
  ParallelFor(corpus.size(), [&](std::size_t s) {
    const Scene& scene = corpus[s];
    for (const DetectedObject& a : scene.objects) {
      for (const DetectedObject& b : scene.objects) {
        if (a.id == b.id) continue;
        scene_truth[s].push_back(static_cast<int>(scenegen::LabelRelationOracle(a, b, scene.width, scene.height)));
        for (std::size_t m = 0; m < models.size(); ++m) {
          const auto sample = relnet::MakePairSample(a, b, scene.width, scene.height, models[m]->config.grid);
          scene_pred[s][m].push_back(static_cast<int>(relnet::Predict(*models[m], sample).label));
        }
      }
    }
  });
  for (std::size_t m = 0; m < models.size(); ++m) {
    std::vector<int> rel_truth, rel_pred;
    for (std::size_t s = 0; s < corpus.size(); ++s) {
      rel_truth.insert(rel_truth.end(), scene_truth[s].begin(), scene_truth[s].end());
      rel_pred.insert(rel_pred.end(), scene_pred[s][m].begin(), scene_pred[s][m].end());
    }
    rep.relation_ablation.push_back(
        {models[m]->config.variant, metrics::Classify(rel_truth, rel_pred, relnet::kNumRelations)});
  }
  return rep;
}

std::string Pipeline::InferenceReportJson(const InferenceReport& r) const {
  ojson j;
  j["config_hash"] = ConfigHash(cfg_);
  j["seed"] = cfg_.seed;
  j["leak_probability"] = r.leak_probability;
  j["threshold"] = cfg_.threshold;
  j["decision"] = r.decision;
  j["fired_rule"] = r.fired_rule ? ojson(*r.fired_rule) : ojson(nullptr);
  j["fired_rule_text"] = r.fired_rule ? ojson(r.fired_rule_text) : ojson(nullptr);
  if (r.binding) {
    ojson b = ojson::object();
    for (const auto& [var, id] : r.binding->binding) b[var] = id;
    j["binding"] = std::move(b);
  } else {
    j["binding"] = nullptr;
  }
  j["rule_scores"] = r.rule_scores;
  ojson rels = ojson::array();
  for (const PairRelation& p : r.relations) {
    rels.push_back({{"subject", p.subject_id},
                    {"reference", p.reference_id},
                    {"label", relnet::RelationName(p.label)},
                    {"probabilities", p.probabilities}});
  }
  j["relations"] = std::move(rels);
  j["enhancement"] = r.enhancement ? EnhanceReportJson(*r.enhancement) : ojson(nullptr);
  return j.dump(2);
}

std::string Pipeline::EvalReportJson(const EvalReport& r) const {
  ojson j;
  j["config_hash"] = ConfigHash(cfg_);
  j["seed"] = cfg_.seed;
  j["threshold"] = cfg_.threshold;
  j["scenes"] = r.scenes;
  j["full_pipeline"] = BinaryJson(r.full);
  j["baseline"] = BinaryJson(r.baseline);
  j["baseline_note"] =
      "no-logic baseline: leak iff max suspected_area confidence >= threshold (stands in for a whole-image "
      "classifier, which needs field imagery)";
  j["oil_area_ap"] = {{"object_labels", r.object_labels},
                      {"ap50", r.oil_area_ap.ap50},
                      {"ap75", r.oil_area_ap.ap75},
                      {"map", r.oil_area_ap.map}};
  ojson ablation = ojson::array();
  for (const RelationAblationRow& row : r.relation_ablation) {
    ablation.push_back({{"variant", relnet::VariantName(row.variant)},
                        {"above", ScoresJson(row.report.per_class[0])},
                        {"nearby", ScoresJson(row.report.per_class[1])},
                        {"other", ScoresJson(row.report.per_class[2])},
                        {"total", ScoresJson(row.report.total)}});
  }
  j["relation_ablation"] = std::move(ablation);
  return j.dump(2);
}

std::string RenderEvalTables(const EvalReport& r) {
  std::ostringstream out;
  out << "Scene-level F1 (" << r.scenes << " scenes)\n";
  out << Pad("model", 30) << "  normal      leak     total\n";
  out << Pad("confidence-threshold baseline", 30) << Fixed(r.baseline.report.per_class[0].f1)
      << "  " << Fixed(r.baseline.report.per_class[1].f1) << "  " << Fixed(r.baseline.report.total.f1) << "\n";
  out << Pad("full pipeline", 30) << Fixed(r.full.report.per_class[0].f1) << "  "
      << Fixed(r.full.report.per_class[1].f1) << "  " << Fixed(r.full.report.total.f1) << "\n";
  if (!r.relation_ablation.empty()) {
    out << "\nRelation classification F1 by input\n";
    out << Pad("input", 30) << "   above    nearby     other     total\n";
    for (const RelationAblationRow& row : r.relation_ablation) {
      const char* name = row.variant == relnet::InputVariant::kPosition       ? "position"
                         : row.variant == relnet::InputVariant::kPositionType ? "position + type"
                                                                              : "position + type + contour";
      out << Pad(name, 30);
      for (const auto& s : row.report.per_class) out << Fixed(s.f1) << "  ";
      out << Fixed(row.report.total.f1) << "\n";
    }
  }
  return out.str();
}

Ruleset LoadRuleset(const std::string& rules_path, const std::optional<std::string>& params_path) {
  Ruleset rs;
  std::vector<logic::ParsedRule> parsed;
  try {
    parsed = logic::ParseRules(ReadTextFile(rules_path));
  } catch (const Error& e) {
    throw Error(e.kind(), rules_path + ":" + e.what());
  }
  if (parsed.empty()) ThrowData(rules_path + ": no rules");
  for (const auto& pr : parsed) rs.rules.push_back(pr.rule);
  if (params_path) {
    rs.params = logic::ParseRuleParams(ReadTextFile(*params_path));
  } else {
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      if (!parsed[i].params) {
        ThrowUsage(rules_path + ": rule " + std::to_string(i) +
                   " has no inline parameters and no parameter file was given");
      }
      rs.params.push_back(*parsed[i].params);
    }
  }
  logic::CheckRuleParams(rs.rules, rs.params);
  return rs;
}

std::vector<Scene> LoadSceneDir(const std::string& dir) {
  if (!fs::is_directory(dir)) ThrowUsage("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scene> scenes;
  for (const fs::path& f : files) scenes.push_back(LoadSceneFile(f.string()));
  return scenes;
}

logic::RuleTrainResult TrainRulesOnCorpus(const std::vector<logic::RuleAST>& rules,
                                          std::vector<logic::RuleParams> initial,
                                          const std::vector<Scene>& corpus, const relnet::RelNetParams& model,
                                          const logic::RuleTrainConfig& cfg) {
  std::vector<logic::LabeledScene> data;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    if (!corpus[s].leak_label) ThrowData("scene " + std::to_string(s) + " has no leak_label");
    data.push_back({corpus[s], ClassifyPairs(model, corpus[s]), *corpus[s].leak_label});
  }
  return logic::TrainRuleParams(rules, std::move(initial), data, cfg);
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteTextFile(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ThrowUsage("cannot write " + path);
  out << text;
  if (!out) ThrowUsage("failed writing " + path);
}

}  // namespace oilsense::pipeline
