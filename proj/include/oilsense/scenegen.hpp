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
#ifndef OILSENSE_SCENEGEN_HPP_
#define OILSENSE_SCENEGEN_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oilsense/relnet.hpp"
#include "oilsense/scene.hpp"

namespace oilsense::scenegen {

using relnet::RelationLabel;

struct IntRange {
  int min = 0;
  int max = 0;
};

struct RealRange {
  double min = 0.0;
  double max = 0.0;
};

struct GenConfig {
  int width = 320;
  int height = 240;
  IntRange ground_count{1, 1};
  IntRange tank_count{0, 2};
  IntRange blob_count{0, 3};   // suspected areas placed by relation mix
  IntRange other_count{0, 1};  // unrelated "other" objects
  IntRange blob_vertices{8, 16};
  RealRange ground_fraction{0.3, 0.5};
  // Chance of one extra suspected area placed away from ground and tanks.
  double distractor_probability = 0.3;
  // Target fractions for (Above, Nearby, Other) blob placements.
  std::array<double, relnet::kNumRelations> relation_mix{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double confidence_jitter = 0.1;
  std::uint64_t seed = 1;

  // Throws Error(kUsage).
  void Validate() const;
};

GenConfig ParseGenConfigJson(std::string_view text);
std::string GenConfigToJson(const GenConfig& cfg);

// Ground-truth relation of `subject` to `reference`:
//  Above  iff horizontal overlap >= 25% of the narrower box, subject bottom
//         within [-0.05, +0.15] * H of the reference top, and subject center
//         strictly higher (smaller y);
//  Nearby iff center distance <= 0.25 * image diagonal;
//  Other  otherwise.
RelationLabel LabelRelationOracle(const DetectedObject& subject, const DetectedObject& reference,
                                  double image_width, double image_height);

// One blob placement: the blob, the object it was placed against, and the
// relation that was targeted.
struct Placement {
  int subject_id;
  int reference_id;
  RelationLabel intended;
};

struct GeneratedScene {
  Scene scene;
  std::vector<Placement> placements;
};

// Pure function of (cfg, index).
GeneratedScene GenSceneWithTrace(const GenConfig& cfg, std::uint64_t index);
Scene GenScene(const GenConfig& cfg, std::uint64_t index);

struct LabeledPair {
  relnet::PairSample sample;
  std::uint64_t scene_seed = 0;
  std::uint64_t scene_index = 0;
  int subject_id = 0;
  int reference_id = 0;
};

// Per-class quotas from the relation mix (largest remainder), filled from
// successive scenes. Throws Error(kData) naming a class that cannot be filled.
std::vector<LabeledPair> GenPairDataset(const GenConfig& cfg, std::size_t n_pairs, std::size_t grid = 28);

std::string LabeledPairToJsonLine(const LabeledPair& pair);
LabeledPair ParseLabeledPairJsonLine(std::string_view line);
void WritePairsJsonl(const std::vector<LabeledPair>& pairs, const std::string& path);
std::vector<LabeledPair> ReadPairsJsonl(const std::string& path);

}  // namespace oilsense::scenegen

#endif  // OILSENSE_SCENEGEN_HPP_
