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
#include "oilsense/metrics.hpp"

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

namespace oilsense::metrics {
namespace {

TEST(F1Test, Examples) {
  EXPECT_EQ(F1(0.5, 0.5), 0.5);
  EXPECT_EQ(F1(1.0, 0.0), 0.0);
  EXPECT_EQ(F1(0.0, 0.0), 0.0);
  EXPECT_NEAR(F1(0.8, 0.6), 0.6857, 1e-4);
  EXPECT_NEAR(F1(0.8, 0.6), 2 * 0.8 * 0.6 / 1.4, 1e-15);
}

TEST(ClassifyTest, BinaryCounts) {
  const std::vector<int> truth{0, 0, 0, 1, 1, 1, 1};
  const std::vector<int> pred{0, 1, 0, 1, 1, 0, 1};
  const auto r = Classify(truth, pred, 2);
  EXPECT_EQ(r.confusion, (std::vector<std::vector<std::size_t>>{{2, 1}, {1, 3}}));
  EXPECT_NEAR(r.per_class[1].precision, 0.75, 1e-15);
  EXPECT_NEAR(r.per_class[1].recall, 0.75, 1e-15);
  EXPECT_NEAR(r.per_class[0].precision, 2.0 / 3, 1e-15);
  EXPECT_EQ(r.per_class[0].support, 3u);
  EXPECT_NEAR(r.accuracy, 5.0 / 7, 1e-15);
  EXPECT_NEAR(r.total.f1, (r.per_class[0].f1 + r.per_class[1].f1) / 2, 1e-15);
  EXPECT_EQ(r.total.support, 7u);
}

TEST(ClassifyTest, DegenerateInputsAreZeroSafe) {
  const std::vector<int> truth{0, 0, 0};
  const std::vector<int> pred{0, 0, 0};
  const auto r = Classify(truth, pred, 2);
  EXPECT_EQ(r.per_class[1].precision, 0.0);
  EXPECT_EQ(r.per_class[1].recall, 0.0);
  EXPECT_EQ(r.per_class[1].f1, 0.0);
  EXPECT_EQ(r.accuracy, 1.0);
  const auto empty = Classify({}, {}, 2);
  EXPECT_EQ(empty.accuracy, 0.0);
  EXPECT_EQ(empty.total.f1, 0.0);
}

TEST(ApTest, PerfectPredictions) {
  std::vector<GroundTruthBox> gt{{0, {0, 0, 10, 10}}, {0, {20, 20, 30, 35}}, {1, {5, 5, 9, 9}}};
  std::vector<ScoredBox> pred{{0, {0, 0, 10, 10}, 0.1}, {0, {20, 20, 30, 35}, 0.9}, {1, {5, 5, 9, 9}, 0.4}};
  for (double t : DefaultIouGrid()) EXPECT_EQ(ApAtIou(pred, gt, t), 1.0) << t;
  const auto s = SummarizeAp(pred, gt, DefaultIouGrid());
  EXPECT_EQ(s.map, 1.0);
}

TEST(ApTest, NoPredictions) {
  std::vector<GroundTruthBox> gt{{0, {0, 0, 10, 10}}};
  EXPECT_EQ(ApAtIou({}, gt, 0.5), 0.0);
  EXPECT_EQ(ApAtIou({}, {}, 0.5), 0.0);
}

TEST(ApTest, GridIsFiftyToNinetyFive) {
  const auto g = DefaultIouGrid();
  ASSERT_EQ(g.size(), 10u);
  EXPECT_NEAR(g.front(), 0.50, 1e-12);
  EXPECT_NEAR(g.back(), 0.95, 1e-12);
}

double Iou(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1()));
  const double ih = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1()));
  const double inter = iw * ih;
  const double uni = (a.x2() - a.x1()) * (a.y2() - a.y1()) + (b.x2() - b.x1()) * (b.y2() - b.y1()) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

// Precision-recall staircase: every rank k yields (recall_k, precision_k);
// AP sums, over each recall step, the best precision at that recall or later.
double OracleAp(std::vector<ScoredBox> pred, const std::vector<GroundTruthBox>& gt, double thr) {
  if (gt.empty()) return 0.0;
  std::stable_sort(pred.begin(), pred.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  std::vector<bool> used(gt.size(), false);
  std::vector<bool> hit;
  for (const auto& p : pred) {
    int best = -1;
    double best_iou = -1;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g] || gt[g].image != p.image) continue;
      const double v = Iou(p.box, gt[g].box);
      if (v >= thr && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) used[best] = true;
    hit.push_back(best >= 0);
  }
  std::vector<double> precision;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < hit.size(); ++k) {
    tp += hit[k];
    precision.push_back(static_cast<double>(tp) / (k + 1));
  }
  double ap = 0.0;
  for (std::size_t k = 0; k < hit.size(); ++k) {
    if (!hit[k]) continue;
    double best = 0.0;
    for (std::size_t j = k; j < hit.size(); ++j) best = std::max(best, precision[j]);
    ap += best / gt.size();
  }
  return ap;
}

TEST(ApTest, HandCase) {
  std::vector<GroundTruthBox> gt{{0, {0, 0, 10, 10}}, {0, {50, 50, 60, 60}}};
  std::vector<ScoredBox> pred{{0, {0, 0, 10, 10}, 0.9}, {0, {100, 100, 110, 110}, 0.8}, {0, {50, 50, 60, 60}, 0.7}};
  const double ap = ApAtIou(pred, gt, 0.5);
  EXPECT_NEAR(ap, OracleAp(pred, gt, 0.5), 1e-12);
  EXPECT_NEAR(ap, 0.5 * 1.0 + 0.5 * (2.0 / 3), 1e-12);
}

TEST(ApTest, DuplicateDetectionCountsOnce) {
  std::vector<GroundTruthBox> gt{{0, {0, 0, 10, 10}}};
  std::vector<ScoredBox> pred{{0, {0, 0, 10, 10}, 0.9}, {0, {0, 0, 10, 10}, 0.8}};
  EXPECT_NEAR(ApAtIou(pred, gt, 0.5), 1.0, 1e-12);
  std::vector<ScoredBox> rev{{0, {0, 0, 10, 10}, 0.8}, {0, {0, 0, 10, 10}, 0.9}};
  EXPECT_NEAR(ApAtIou(rev, gt, 0.5), 1.0, 1e-12);
}

TEST(ApTest, RandomCasesMatchOracleAndAreMonotone) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GroundTruthBox> gt;
    std::vector<ScoredBox> pred;
    const int n_gt = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n_gt; ++i) {
      const int img = static_cast<int>(rng() % 2);
      const double x = u(rng) * 50, y = u(rng) * 50, w = 5 + u(rng) * 20, h = 5 + u(rng) * 20;
      gt.push_back({img, {x, y, x + w, y + h}});
      const int copies = static_cast<int>(rng() % 3);
      for (int c = 0; c < copies; ++c) {
        const double dx = (u(rng) - 0.5) * w * 0.6, dy = (u(rng) - 0.5) * h * 0.6;
        pred.push_back({img, {x + dx, y + dy, x + dx + w, y + dy + h}, u(rng)});
      }
    }
    for (int i = 0; i < 2; ++i) {
      const double x = u(rng) * 80, y = u(rng) * 80;
      pred.push_back({static_cast<int>(rng() % 2), {x, y, x + 8, y + 8}, u(rng)});
    }
    double prev = 1.0;
    for (double t : DefaultIouGrid()) {
      const double ap = ApAtIou(pred, gt, t);
      ASSERT_NEAR(ap, OracleAp(pred, gt, t), 1e-12) << trial << " @" << t;
      ASSERT_GE(ap, 0.0);
      ASSERT_LE(ap, 1.0 + 1e-12);
      ASSERT_LE(ap, prev + 1e-12);
      prev = ap;
    }
    const auto s = SummarizeAp(pred, gt, DefaultIouGrid());
    EXPECT_NEAR(s.ap50, ApAtIou(pred, gt, 0.5), 1e-15);
    EXPECT_NEAR(s.ap75, ApAtIou(pred, gt, 0.75), 1e-15);
  }
}

}  // namespace
}  // namespace oilsense::metrics
