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
#ifndef OILSENSE_COMMANDS_HPP_
#define OILSENSE_COMMANDS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "oilsense/enhance.hpp"
#include "oilsense/logic.hpp"
#include "oilsense/relnet.hpp"

// File-level operations behind the command-line tools.
namespace oilsense::commands {

// Enhances a PGM/PPM file; returns the JSON report.
std::string EnhanceFile(const std::string& in_path, const std::string& out_path, const enhance::Weights& weights);

// Scene corpus: writes <out_dir>/scene_NNNNN.json for indices [0, n). The
// count comes from `n_scenes` in the config when `n` is empty.
std::size_t GenerateScenes(std::string_view gen_config_json, std::optional<std::size_t> n,
                           const std::string& out_dir);
// Pair dataset: writes <out_dir>/pairs.jsonl. Reads `n_pairs` and `grid`.
std::size_t GeneratePairs(std::string_view gen_config_json, std::optional<std::size_t> n,
                          const std::string& out_dir);

// {"model": {grid, conv1_filters, conv2_filters, fc1_width, fc2_width,
//  variant, init_seed}, "train": {lr_initial, lr_final, lr_policy, epochs,
//  batch_size, momentum, weight_decay, seed}}; all keys optional.
struct RelTrainSpec {
  relnet::RelNetConfig model;
  relnet::TrainConfig train;
  std::uint64_t init_seed = 1;
};
RelTrainSpec ParseRelTrainSpec(std::string_view text);

// Trains on a pairs file, writes the weights, returns the loss CSV.
std::string TrainRelnet(const std::string& pairs_path, std::string_view spec_json, const std::string& out_path);

// {"lr", "steps", "momentum", "seed"}; all keys optional.
logic::RuleTrainConfig ParseRuleTrainConfig(std::string_view text);

// Trains rule weights on a labelled scene directory and writes them. Inline
// rule parameters, when present on every rule, are the starting point.
// Returns a JSON summary with the loss history.
std::string TrainRules(const std::string& rules_path, const std::string& scenes_dir, const std::string& relnet_path,
                       std::string_view config_json, const std::string& out_path);

}  // namespace oilsense::commands

#endif  // OILSENSE_COMMANDS_HPP_
