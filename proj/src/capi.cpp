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

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "oilsense/commands.hpp"
#include "oilsense/error.hpp"
#include "oilsense/logic.hpp"
#include "oilsense/pipeline.hpp"
#include "oilsense/relnet.hpp"
#include "oilsense/scene.hpp"

struct os_scene {
  oilsense::Scene scene;
};
struct os_relnet {
  oilsense::relnet::RelNetParams params;
};
struct os_ruleset {
  std::vector<oilsense::logic::ParsedRule> parsed;
};
struct os_pipeline {
  oilsense::pipeline::Pipeline pipeline;
};

namespace {

thread_local std::string last_error;

os_status SetError(os_status status, const char* what) {
  last_error = what;
  return status;
}

template <typename Fn>
os_status Guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return OS_OK;
  } catch (const oilsense::Error& e) {
    switch (e.kind()) {
      case oilsense::ErrorKind::kUsage:
        return SetError(OS_ERR_USAGE, e.what());
      case oilsense::ErrorKind::kData:
        return SetError(OS_ERR_DATA, e.what());
      case oilsense::ErrorKind::kNumeric:
        return SetError(OS_ERR_NUMERIC, e.what());
    }
    return SetError(OS_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return SetError(OS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return SetError(OS_ERR_INTERNAL, e.what());
  }
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Require(const void* p, const char* name) {
  if (!p) oilsense::ThrowUsage(std::string(name) + " is NULL");
}

std::vector<oilsense::logic::RuleAST> Rules(const os_ruleset* r) {
  std::vector<oilsense::logic::RuleAST> out;
  for (const auto& pr : r->parsed) out.push_back(pr.rule);
  return out;
}

std::vector<oilsense::logic::RuleParams> Params(const os_ruleset* r) {
  std::vector<oilsense::logic::RuleParams> out;
  for (std::size_t i = 0; i < r->parsed.size(); ++i) {
    if (!r->parsed[i].params) oilsense::ThrowUsage("rule " + std::to_string(i) + " has no parameters");
    out.push_back(*r->parsed[i].params);
  }
  return out;
}

std::size_t IndexOf(const oilsense::Scene& s, int id) {
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    if (s.objects[i].id == id) return i;
  }
  oilsense::ThrowData("no object with id " + std::to_string(id));
}

}  // namespace

extern "C" {

const char* os_last_error(void) { return last_error.c_str(); }

const char* os_version(void) { return "1.0.0"; }

void os_string_free(char* s) { std::free(s); }

os_status os_scene_parse(const char* json, os_scene** out) {
  return Guard([&] {
    Require(json, "json");
    Require(out, "out");
    *out = new os_scene{oilsense::ParseSceneJson(json)};
  });
}

os_status os_scene_load(const char* path, os_scene** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new os_scene{oilsense::LoadSceneFile(path)};
  });
}

os_status os_scene_to_json(const os_scene* scene, char** out) {
  return Guard([&] {
    Require(scene, "scene");
    Require(out, "out");
    *out = Dup(oilsense::SerializeSceneJson(scene->scene));
  });
}

size_t os_scene_object_count(const os_scene* scene) { return scene ? scene->scene.objects.size() : 0; }

void os_scene_free(os_scene* scene) { delete scene; }

os_status os_relnet_load(const char* path, os_relnet** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new os_relnet{oilsense::relnet::LoadParams(path)};
  });
}

os_status os_relnet_predict(const os_relnet* net, const os_scene* scene, int subject_id, int reference_id,
                            int* label, double* probs) {
  return Guard([&] {
    Require(net, "net");
    Require(scene, "scene");
    const oilsense::Scene& s = scene->scene;
    const auto sample = oilsense::relnet::MakePairSample(s.objects[IndexOf(s, subject_id)],
                                                         s.objects[IndexOf(s, reference_id)], s.width, s.height,
                                                         net->params.config.grid);
    const auto pred = oilsense::relnet::Predict(net->params, sample);
    if (label) *label = static_cast<int>(pred.label);
    if (probs) std::copy(pred.probabilities.begin(), pred.probabilities.end(), probs);
  });
}

void os_relnet_free(os_relnet* net) { delete net; }

os_status os_ruleset_parse(const char* text, os_ruleset** out) {
  return Guard([&] {
    Require(text, "text");
    Require(out, "out");
    *out = new os_ruleset{oilsense::logic::ParseRules(text)};
  });
}

os_status os_ruleset_set_params(os_ruleset* rules, const char* params_json) {
  return Guard([&] {
    Require(rules, "rules");
    Require(params_json, "params_json");
    const auto params = oilsense::logic::ParseRuleParams(params_json);
    oilsense::logic::CheckRuleParams(Rules(rules), params);
    for (std::size_t i = 0; i < params.size(); ++i) rules->parsed[i].params = params[i];
  });
}

size_t os_ruleset_size(const os_ruleset* rules) { return rules ? rules->parsed.size() : 0; }

os_status os_ruleset_to_text(const os_ruleset* rules, char** out) {
  return Guard([&] {
    Require(rules, "rules");
    Require(out, "out");
    *out = Dup(oilsense::logic::PrintRules(rules->parsed));
  });
}

os_status os_ruleset_evaluate(const os_ruleset* rules, const os_scene* scene, const os_relnet* net, double* score,
                              int* fired_rule) {
  return Guard([&] {
    Require(rules, "rules");
    Require(scene, "scene");
    Require(net, "net");
    const auto table = oilsense::pipeline::ClassifyPairs(net->params, scene->scene);
    const auto ev = oilsense::logic::EvaluateRuleset(Rules(rules), Params(rules), scene->scene, table);
    if (score) *score = ev.score.value();
    if (fired_rule) *fired_rule = ev.fired_rule ? static_cast<int>(*ev.fired_rule) : -1;
  });
}

void os_ruleset_free(os_ruleset* rules) { delete rules; }

os_status os_pipeline_load(const char* config_path, os_pipeline** out) {
  return Guard([&] {
    Require(config_path, "config_path");
    Require(out, "out");
    const auto cfg = oilsense::pipeline::LoadPipelineConfig(config_path);
    *out = new os_pipeline{oilsense::pipeline::Pipeline::Load(cfg)};
  });
}

os_status os_pipeline_infer(const os_pipeline* p, const os_scene* scene, char** report_json) {
  return Guard([&] {
    Require(p, "pipeline");
    Require(scene, "scene");
    Require(report_json, "report_json");
    const auto rep = p->pipeline.RunInference(scene->scene);
    *report_json = Dup(p->pipeline.InferenceReportJson(rep));
  });
}

os_status os_pipeline_eval_dir(const os_pipeline* p, const char* scenes_dir, int ablations, char** report_json,
                               char** tables_text) {
  return Guard([&] {
    Require(p, "pipeline");
    Require(scenes_dir, "scenes_dir");
    Require(report_json, "report_json");
    const auto corpus = oilsense::pipeline::LoadSceneDir(scenes_dir);
    const auto rep = p->pipeline.RunEval(corpus, ablations != 0);
    std::string json = p->pipeline.EvalReportJson(rep);
    std::string tables = oilsense::pipeline::RenderEvalTables(rep);
    *report_json = Dup(json);
    if (tables_text) *tables_text = Dup(tables);
  });
}

void os_pipeline_free(os_pipeline* p) { delete p; }

os_status os_enhance_file(const char* in_path, const char* out_path, double wb, double wo, double wd,
                          char** report_json) {
  return Guard([&] {
    Require(in_path, "in_path");
    Require(out_path, "out_path");
    const std::string rep = oilsense::commands::EnhanceFile(in_path, out_path, {wb, wo, wd});
    if (report_json) *report_json = Dup(rep);
  });
}

os_status os_generate_scenes(const char* config_json, long count, const char* out_dir, size_t* written) {
  return Guard([&] {
    Require(config_json, "config_json");
    Require(out_dir, "out_dir");
    std::optional<std::size_t> n;
    if (count >= 0) n = static_cast<std::size_t>(count);
    const std::size_t w = oilsense::commands::GenerateScenes(config_json, n, out_dir);
    if (written) *written = w;
  });
}

os_status os_generate_pairs(const char* config_json, long count, const char* out_dir, size_t* written) {
  return Guard([&] {
    Require(config_json, "config_json");
    Require(out_dir, "out_dir");
    std::optional<std::size_t> n;
    if (count >= 0) n = static_cast<std::size_t>(count);
    const std::size_t w = oilsense::commands::GeneratePairs(config_json, n, out_dir);
    if (written) *written = w;
  });
}

os_status os_train_relnet(const char* pairs_path, const char* config_json, const char* out_path, char** loss_csv) {
  return Guard([&] {
    Require(pairs_path, "pairs_path");
    Require(out_path, "out_path");
    const std::string csv = oilsense::commands::TrainRelnet(pairs_path, config_json ? config_json : "", out_path);
    if (loss_csv) *loss_csv = Dup(csv);
  });
}

os_status os_train_rules(const char* rules_path, const char* scenes_dir, const char* relnet_path,
                         const char* config_json, const char* out_path, char** summary_json) {
  return Guard([&] {
    Require(rules_path, "rules_path");
    Require(scenes_dir, "scenes_dir");
    Require(relnet_path, "relnet_path");
    Require(out_path, "out_path");
    const std::string s = oilsense::commands::TrainRules(rules_path, scenes_dir, relnet_path,
                                                         config_json ? config_json : "", out_path);
    if (summary_json) *summary_json = Dup(s);
  });
}

}  // extern "C"
