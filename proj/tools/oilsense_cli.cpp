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
// Command-line front end over the shared C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "oilsense/oilsense.h"

namespace {

// Thrown to unwind with an exit code after printing a message.
struct Exit {
  int code;
};

void Check(os_status s) {
  if (s != OS_OK) {
    std::cerr << "oilsense: " << os_last_error() << "\n";
    throw Exit{static_cast<int>(s)};
  }
}

std::string ReadConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "oilsense: cannot read config " << path << "\n";
    throw Exit{OS_ERR_USAGE};
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteOut(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "oilsense: cannot write " << path << "\n";
    throw Exit{OS_ERR_USAGE};
  }
}

// Owns a string returned by the library.
struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { os_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

void Emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
  } else {
    WriteOut(path, text);
  }
}

std::string DefaultLossPath(const std::string& weights_path) {
  const auto dot = weights_path.find_last_of('.');
  const auto slash = weights_path.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? weights_path.substr(0, dot) : weights_path) + ".loss.csv";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oil leak screening: enhancement, relation learning, fuzzy rule inference"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(os_version()));

  // enhance
  std::string enh_in, enh_out, enh_report;
  std::vector<double> enh_weights{1.0, 1.0, 1.0};
  auto* enh = app.add_subcommand("enhance", "bi-histogram equalization with automatic split search");
  enh->add_option("input", enh_in, "input PGM/PPM")->required();
  enh->add_option("--out", enh_out, "output PGM/PPM")->required();
  enh->add_option("--weights", enh_weights, "wb,wo,wd")->delimiter(',')->expected(3);
  enh->add_option("--report", enh_report, "write the JSON report here instead of stdout");

  // gen
  std::string gen_kind, gen_config, gen_out;
  long gen_count = -1;
  auto* gen = app.add_subcommand("gen", "generate synthetic scenes or labelled relation pairs");
  gen->add_option("kind", gen_kind, "scenes | pairs")->required()->check(CLI::IsMember({"scenes", "pairs"}));
  gen->add_option("--config", gen_config, "generator config JSON")->required();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--count", gen_count, "overrides n_scenes / n_pairs");

  // train-rel
  std::string tr_pairs, tr_config, tr_out, tr_loss;
  auto* trel = app.add_subcommand("train-rel", "train the relation network");
  trel->add_option("--pairs", tr_pairs, "pairs.jsonl")->required();
  trel->add_option("--config", tr_config, "model/train config JSON");
  trel->add_option("--out", tr_out, "weights JSON")->required();
  trel->add_option("--loss-csv", tr_loss, "loss log (default: <out>.loss.csv)");

  // train-rules
  std::string ru_rules, ru_scenes, ru_relnet, ru_out, ru_config, ru_summary;
  auto* trul = app.add_subcommand("train-rules", "learn rule weights on a labelled scene corpus");
  trul->add_option("--rules", ru_rules, "rules file")->required();
  trul->add_option("--scenes", ru_scenes, "scene directory")->required();
  trul->add_option("--relnet", ru_relnet, "relation network weights")->required();
  trul->add_option("--out", ru_out, "rule parameter JSON")->required();
  trul->add_option("--config", ru_config, "optimizer config JSON");
  trul->add_option("--summary", ru_summary, "write the training summary here instead of stdout");

  // infer
  std::string in_config, in_scene, in_out;
  auto* inf = app.add_subcommand("infer", "leak probability for one scene");
  inf->add_option("--config", in_config, "pipeline config JSON")->required();
  inf->add_option("--scene", in_scene, "scene JSON")->required();
  inf->add_option("--out", in_out, "write the report here instead of stdout");

  // eval
  std::string ev_config, ev_scenes, ev_out;
  bool ev_ablations = false;
  auto* ev = app.add_subcommand("eval", "evaluate on a labelled scene corpus");
  ev->add_option("--config", ev_config, "pipeline config JSON")->required();
  ev->add_option("--scenes", ev_scenes, "scene directory")->required();
  ev->add_flag("--ablations", ev_ablations, "add the relation-input ablation table");
  ev->add_option("--out", ev_out, "write the JSON report here; tables go to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : OS_ERR_USAGE;
  }

  try {
    if (*enh) {
      OwnedString rep;
      Check(os_enhance_file(enh_in.c_str(), enh_out.c_str(), enh_weights[0], enh_weights[1], enh_weights[2], &rep.p));
      Emit(rep.str(), enh_report);
    } else if (*gen) {
      const std::string cfg = ReadConfig(gen_config);
      std::size_t written = 0;
      if (gen_kind == "scenes") {
        Check(os_generate_scenes(cfg.c_str(), gen_count, gen_out.c_str(), &written));
      } else {
        Check(os_generate_pairs(cfg.c_str(), gen_count, gen_out.c_str(), &written));
      }
      std::cout << "wrote " << written << " " << gen_kind << " to " << gen_out << "\n";
    } else if (*trel) {
      const std::string cfg = tr_config.empty() ? std::string() : ReadConfig(tr_config);
      OwnedString csv;
      Check(os_train_relnet(tr_pairs.c_str(), cfg.c_str(), tr_out.c_str(), &csv.p));
      const std::string loss_path = tr_loss.empty() ? DefaultLossPath(tr_out) : tr_loss;
      WriteOut(loss_path, csv.str());
      std::cout << "wrote " << tr_out << " and " << loss_path << "\n";
    } else if (*trul) {
      const std::string cfg = ru_config.empty() ? std::string() : ReadConfig(ru_config);
      OwnedString summary;
      Check(os_train_rules(ru_rules.c_str(), ru_scenes.c_str(), ru_relnet.c_str(), cfg.c_str(), ru_out.c_str(),
                           &summary.p));
      Emit(summary.str(), ru_summary);
    } else if (*inf) {
      os_pipeline* p = nullptr;
      Check(os_pipeline_load(in_config.c_str(), &p));
      os_scene* scene = nullptr;
      const os_status s = os_scene_load(in_scene.c_str(), &scene);
      if (s != OS_OK) os_pipeline_free(p);
      Check(s);
      OwnedString rep;
      const os_status r = os_pipeline_infer(p, scene, &rep.p);
      os_scene_free(scene);
      os_pipeline_free(p);
      Check(r);
      Emit(rep.str(), in_out);
    } else if (*ev) {
      os_pipeline* p = nullptr;
      Check(os_pipeline_load(ev_config.c_str(), &p));
      OwnedString rep, tables;
      const os_status r = os_pipeline_eval_dir(p, ev_scenes.c_str(), ev_ablations ? 1 : 0, &rep.p, &tables.p);
      os_pipeline_free(p);
      Check(r);
      if (ev_out.empty()) {
        Emit(rep.str(), "");
        std::cout << "\n";
      } else {
        WriteOut(ev_out, rep.str());
      }
      std::cout << tables.str();
    }
  } catch (const Exit& e) {
    return e.code;
  }
  return 0;
}
