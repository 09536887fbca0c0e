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
#include <numeric>
#include <optional>

#include "oilsense/error.hpp"

namespace oilsense::metrics {

double F1(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

ClassificationReport Classify(std::span<const int> truth, std::span<const int> predicted,
                              std::size_t num_classes) {
  if (truth.size() != predicted.size()) ThrowData("truth and prediction counts differ");
  if (num_classes == 0) ThrowUsage("need at least one class");
  ClassificationReport rep;
  rep.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= num_classes ||
        static_cast<std::size_t>(predicted[i]) >= num_classes) {
      ThrowData("class index out of range");
    }
    ++rep.confusion[truth[i]][predicted[i]];
    if (truth[i] == predicted[i]) ++correct;
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t tp = rep.confusion[c][c], pred_c = 0, true_c = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      pred_c += rep.confusion[k][c];
      true_c += rep.confusion[c][k];
    }
    ClassScores s;
    s.precision = pred_c ? static_cast<double>(tp) / static_cast<double>(pred_c) : 0.0;
    s.recall = true_c ? static_cast<double>(tp) / static_cast<double>(true_c) : 0.0;
    s.f1 = F1(s.precision, s.recall);
    s.support = true_c;
    rep.per_class.push_back(s);
  }
  const double n = static_cast<double>(num_classes);
  for (const ClassScores& s : rep.per_class) {
    rep.total.precision += s.precision / n;
    rep.total.recall += s.recall / n;
    rep.total.f1 += s.f1 / n;
    rep.total.support += s.support;
  }
  rep.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  return rep;
}

double ApAtIou(std::span<const ScoredBox> predictions, std::span<const GroundTruthBox> ground_truths,
               double iou_threshold) {
  if (ground_truths.empty()) return 0.0;
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].score > predictions[b].score;
  });

  std::vector<bool> matched(ground_truths.size(), false);
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  const double n_gt = static_cast<double>(ground_truths.size());
  for (std::size_t idx : order) {
    const ScoredBox& p = predictions[idx];
    double best_iou = iou_threshold;
    std::optional<std::size_t> best;
    for (std::size_t g = 0; g < ground_truths.size(); ++g) {
      if (matched[g] || ground_truths[g].image != p.image) continue;
      const double iou = BboxIou(p.box, ground_truths[g].box);
      if (iou >= best_iou && (!best || iou > best_iou)) {
        best_iou = iou;
        best = g;
      }
    }
    if (best) {
      matched[*best] = true;
      ++tp;
    } else {
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / n_gt);
  }
  // Precision envelope, then area under the recall steps.
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return std::clamp(ap, 0.0, 1.0);
}

std::vector<double> DefaultIouGrid() {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(0.5 + 0.05 * i);
  return grid;
}

ApSummary SummarizeAp(std::span<const ScoredBox> predictions, std::span<const GroundTruthBox> ground_truths,
                      std::span<const double> iou_grid) {
  ApSummary s;
  s.ap50 = ApAtIou(predictions, ground_truths, 0.5);
  s.ap75 = ApAtIou(predictions, ground_truths, 0.75);
  if (!iou_grid.empty()) {
    double sum = 0.0;
    for (double t : iou_grid) sum += ApAtIou(predictions, ground_truths, t);
    s.map = sum / static_cast<double>(iou_grid.size());
  }
  return s;
}

}  // namespace oilsense::metrics
