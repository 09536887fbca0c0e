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
#include "oilsense/scenegen.hpp"

#include <cmath>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "oilsense/error.hpp"
#include "test_util.hpp"

namespace oilsense::scenegen {
namespace {

using testing::Rect;

TEST(OracleTest, BlobOnTopOfGroundIsAbove) {
  const auto ground = Rect(0, ClassLabel::kGround, 1, 0, 150, 320, 240);
  const auto blob = Rect(1, ClassLabel::kSuspectedArea, 1, 140, 135, 180, 150);
  EXPECT_EQ(LabelRelationOracle(blob, ground, 320, 240), RelationLabel::kAbove);
  EXPECT_NE(LabelRelationOracle(ground, blob, 320, 240), RelationLabel::kAbove);
}

TEST(OracleTest, OppositeCornersAreOther) {
  const auto a = Rect(0, ClassLabel::kSuspectedArea, 1, 0, 0, 10, 10);
  const auto b = Rect(1, ClassLabel::kOilStorageDevice, 1, 310, 230, 320, 240);
  EXPECT_EQ(LabelRelationOracle(a, b, 320, 240), RelationLabel::kOther);
  EXPECT_EQ(LabelRelationOracle(b, a, 320, 240), RelationLabel::kOther);
}

TEST(OracleTest, SideBySideIsSymmetricNearby) {
  const double diag = std::hypot(320.0, 240.0);
  const double dx = 0.1 * diag;
  const auto a = Rect(0, ClassLabel::kSuspectedArea, 1, 100, 100, 110, 110);
  const auto b = Rect(1, ClassLabel::kOilStorageDevice, 1, 100 + dx, 100, 110 + dx, 110);
  EXPECT_EQ(LabelRelationOracle(a, b, 320, 240), RelationLabel::kNearby);
  EXPECT_EQ(LabelRelationOracle(b, a, 320, 240), RelationLabel::kNearby);
}

TEST(OracleTest, ThresholdEdges) {
  const auto ref = Rect(0, ClassLabel::kGround, 1, 100, 100, 200, 200);
  // Bottom edge 0.15 H below the reference top still counts; center must stay higher.
  const auto low = Rect(1, ClassLabel::kSuspectedArea, 1, 120, 60, 180, 100 + 0.15 * 240);
  EXPECT_EQ(LabelRelationOracle(low, ref, 320, 240), RelationLabel::kAbove);
  const auto too_low = Rect(1, ClassLabel::kSuspectedArea, 1, 120, 60, 180, 100 + 0.16 * 240);
  EXPECT_NE(LabelRelationOracle(too_low, ref, 320, 240), RelationLabel::kAbove);
  // 24% overlap of the narrower box is not enough.
  const auto skew = Rect(1, ClassLabel::kSuspectedArea, 1, 200 - 24, 80, 300, 100);
  EXPECT_NE(LabelRelationOracle(skew, ref, 320, 240), RelationLabel::kAbove);
  const auto skew_ok = Rect(1, ClassLabel::kSuspectedArea, 1, 200 - 25, 80, 275, 100);
  EXPECT_EQ(LabelRelationOracle(skew_ok, ref, 320, 240), RelationLabel::kAbove);
}

TEST(OracleTest, AboveIsAntisymmetricOnGeneratedScenes) {
  const GenConfig cfg;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const Scene s = GenScene(cfg, i);
    for (const auto& a : s.objects) {
      for (const auto& b : s.objects) {
        if (a.id == b.id) continue;
        const auto ab = LabelRelationOracle(a, b, s.width, s.height);
        const auto ba = LabelRelationOracle(b, a, s.width, s.height);
        EXPECT_FALSE(ab == RelationLabel::kAbove && ba == RelationLabel::kAbove);
        if (ab != RelationLabel::kAbove && ba != RelationLabel::kAbove) {
          EXPECT_EQ(ab == RelationLabel::kNearby, ba == RelationLabel::kNearby);
        }
      }
    }
  }
}

TEST(GenSceneTest, DeterministicAndOrderIndependent) {
  GenConfig cfg;
  cfg.seed = 42;
  const Scene a = GenScene(cfg, 7);
  for (std::uint64_t i = 0; i < 7; ++i) GenScene(cfg, i);
  EXPECT_EQ(GenScene(cfg, 7), a);
  EXPECT_NE(GenScene(cfg, 8), a);
  cfg.seed = 43;
  EXPECT_NE(GenScene(cfg, 7), a);
}

TEST(GenSceneTest, ObjectsSatisfySceneInvariants) {
  const GenConfig cfg;
  for (std::uint64_t i = 0; i < 300; ++i) {
    const Scene s = GenScene(cfg, i);
    ASSERT_NO_THROW(ValidateScene(s)) << i;
    ASSERT_TRUE(s.leak_label.has_value());
    for (std::size_t k = 0; k < s.objects.size(); ++k) {
      EXPECT_EQ(s.objects[k].id, static_cast<int>(k));
      for (const Point& p : s.objects[k].polygon.vertices()) {
        EXPECT_GE(p.x, 0.0);
        EXPECT_LE(p.x, s.width);
        EXPECT_GE(p.y, 0.0);
        EXPECT_LE(p.y, s.height);
      }
      EXPECT_GE(s.objects[k].confidence, 0.5);
      EXPECT_LE(s.objects[k].confidence, 1.0);
    }
  }
}

TEST(GenSceneTest, LeakLabelMatchesOracleDefinition) {
  const GenConfig cfg;
  std::size_t positives = 0;
  for (std::uint64_t i = 0; i < 300; ++i) {
    const Scene s = GenScene(cfg, i);
    bool expected = false;
    for (const auto& blob : s.objects) {
      if (blob.label != ClassLabel::kSuspectedArea) continue;
      bool leak = false;
      for (const auto& other : s.objects) {
        const auto rel = LabelRelationOracle(blob, other, s.width, s.height);
        leak |= other.label == ClassLabel::kGround && rel == RelationLabel::kAbove;
        leak |= other.label == ClassLabel::kOilStorageDevice && rel == RelationLabel::kNearby;
      }
      EXPECT_EQ(blob.leak, leak);
      expected |= leak;
    }
    EXPECT_EQ(*s.leak_label, expected);
    positives += expected;
  }
  EXPECT_GT(positives, 50u);
  EXPECT_LT(positives, 250u);
}

TEST(GenSceneTest, NoBlobsMeansNoLeak) {
  GenConfig cfg;
  cfg.blob_count = {0, 0};
  cfg.distractor_probability = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const Scene s = GenScene(cfg, i);
    EXPECT_FALSE(*s.leak_label);
    for (const auto& o : s.objects) EXPECT_NE(o.label, ClassLabel::kSuspectedArea);
  }
}

TEST(GenSceneTest, DistractorsNeverLeak) {
  GenConfig cfg;
  cfg.blob_count = {0, 0};
  cfg.distractor_probability = 1.0;
  std::size_t blobs = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const Scene s = GenScene(cfg, i);
    EXPECT_FALSE(*s.leak_label);
    for (const auto& o : s.objects) blobs += o.label == ClassLabel::kSuspectedArea;
  }
  EXPECT_GT(blobs, 80u);
}

TEST(GenSceneTest, RealizedRelationMix) {
  GenConfig cfg;
  cfg.relation_mix = {0.33, 0.33, 0.34};
  std::array<double, 3> counts{};
  double total = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const GeneratedScene g = GenSceneWithTrace(cfg, i);
    for (const Placement& p : g.placements) {
      const auto& s = g.scene.objects[p.subject_id];
      const auto& r = g.scene.objects[p.reference_id];
      const auto label = LabelRelationOracle(s, r, g.scene.width, g.scene.height);
      EXPECT_EQ(label, p.intended);
      counts[static_cast<std::size_t>(label)] += 1;
      total += 1;
    }
  }
  ASSERT_GT(total, 1000);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(counts[k] / total, cfg.relation_mix[k], 0.05) << k;
}

TEST(GenConfigTest, JsonRoundTripAndValidation) {
  GenConfig cfg;
  cfg.seed = 99;
  cfg.tank_count = {1, 3};
  cfg.relation_mix = {0.5, 0.25, 0.25};
  const GenConfig back = ParseGenConfigJson(GenConfigToJson(cfg));
  EXPECT_EQ(GenConfigToJson(back), GenConfigToJson(cfg));
  EXPECT_EQ(GenScene(back, 3), GenScene(cfg, 3));
  EXPECT_THROW(ParseGenConfigJson(R"({"relation_mix": [0.5, 0.5, 0.5]})"), Error);
  EXPECT_THROW(ParseGenConfigJson(R"({"tank_count": [3, 1]})"), Error);
  EXPECT_THROW(ParseGenConfigJson("[1, 2]"), Error);
}

Scene FindScene(const GenConfig& cfg, const LabeledPair& p) {
  GenConfig c = cfg;
  c.seed = p.scene_seed;
  return GenScene(c, p.scene_index);
}

TEST(PairDatasetTest, SelfConsistentLabelsAndSamples) {
  const GenConfig cfg;
  const auto pairs = GenPairDataset(cfg, 150);
  ASSERT_EQ(pairs.size(), 150u);
  for (const auto& p : pairs) {
    const Scene s = FindScene(cfg, p);
    const auto& subj = s.objects.at(p.subject_id);
    const auto& ref = s.objects.at(p.reference_id);
    EXPECT_EQ(LabelRelationOracle(subj, ref, s.width, s.height), p.sample.label);
    relnet::PairSample expect = relnet::MakePairSample(subj, ref, s.width, s.height);
    expect.label = p.sample.label;
    EXPECT_EQ(p.sample.raster, expect.raster);
    EXPECT_EQ(p.sample.v_poi, expect.v_poi);
    EXPECT_EQ(p.sample.v_cls, expect.v_cls);
  }
}

TEST(PairDatasetTest, BalancedQuotas) {
  std::array<int, 3> counts{};
  for (const auto& p : GenPairDataset(GenConfig{}, 300)) ++counts[static_cast<int>(p.sample.label)];
  EXPECT_EQ(counts, (std::array<int, 3>{100, 100, 100}));
  GenConfig skewed;
  skewed.relation_mix = {0.5, 0.3, 0.2};
  std::array<int, 3> c2{};
  for (const auto& p : GenPairDataset(skewed, 101)) ++c2[static_cast<int>(p.sample.label)];
  EXPECT_EQ(c2[0] + c2[1] + c2[2], 101);
  EXPECT_EQ(c2[0], 51);  // 50.5 -> largest remainder takes the extra pair
  EXPECT_EQ(c2[1], 30);
  EXPECT_EQ(c2[2], 20);
}

TEST(PairDatasetTest, DisjointSeedsShareNoProvenance) {
  GenConfig a, b;
  a.seed = 100;
  b.seed = 200;
  std::set<std::tuple<std::uint64_t, std::uint64_t, int, int>> seen;
  for (const auto& p : GenPairDataset(a, 300)) seen.insert({p.scene_seed, p.scene_index, p.subject_id, p.reference_id});
  for (const auto& p : GenPairDataset(b, 300)) {
    EXPECT_EQ(seen.count({p.scene_seed, p.scene_index, p.subject_id, p.reference_id}), 0u);
  }
}

TEST(PairDatasetTest, UnreachableClassIsNamed) {
  GenConfig cfg;
  cfg.tank_count = {0, 0};
  cfg.blob_count = {0, 0};
  cfg.other_count = {0, 0};
  cfg.distractor_probability = 0.0;
  try {
    GenPairDataset(cfg, 30);
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("above"), std::string::npos) << e.what();
  }
}

TEST(PairDatasetTest, JsonlRoundTrip) {
  const auto pairs = GenPairDataset(GenConfig{}, 30, 16);
  EXPECT_EQ(pairs[0].sample.raster.width(), 16u);
  const auto dir = oilsense::testing::TempDir("pairs");
  const std::string path = (dir / "pairs.jsonl").string();
  WritePairsJsonl(pairs, path);
  const auto back = ReadPairsJsonl(path);
  ASSERT_EQ(back.size(), pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(back[i].sample.raster, pairs[i].sample.raster);
    EXPECT_EQ(back[i].sample.v_poi, pairs[i].sample.v_poi);
    EXPECT_EQ(back[i].sample.v_cls, pairs[i].sample.v_cls);
    EXPECT_EQ(back[i].sample.label, pairs[i].sample.label);
    EXPECT_EQ(back[i].scene_index, pairs[i].scene_index);
    EXPECT_EQ(back[i].subject_id, pairs[i].subject_id);
    EXPECT_EQ(LabeledPairToJsonLine(back[i]), LabeledPairToJsonLine(pairs[i]));
  }
  EXPECT_THROW(ParseLabeledPairJsonLine(R"({"seed": 1})"), Error);
}

}  // namespace
}  // namespace oilsense::scenegen
