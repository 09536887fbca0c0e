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
#ifndef OILSENSE_METRICS_HPP_
#define OILSENSE_METRICS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "oilsense/scene.hpp"

namespace oilsense::metrics {

// Harmonic mean; 0 when p + r == 0.
double F1(double precision, double recall);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

// One-vs-rest scores per class; `total` is the unweighted mean over classes.
// Empty denominators yield 0.
struct ClassificationReport {
  std::vector<ClassScores> per_class;
  ClassScores total;
  double accuracy = 0.0;
  // confusion[truth][predicted]
  std::vector<std::vector<std::size_t>> confusion;
};

ClassificationReport Classify(std::span<const int> truth, std::span<const int> predicted,
                              std::size_t num_classes);

struct ScoredBox {
  int image = 0;
  BBox box{0, 0, 1, 1};
  double score = 0.0;
};

struct GroundTruthBox {
  int image = 0;
  BBox box{0, 0, 1, 1};
};

// All-point interpolated average precision. Predictions are matched greedily
// in descending score order (stable for equal scores) to the unmatched
// ground truth of the same image with the highest IoU >= threshold.
double ApAtIou(std::span<const ScoredBox> predictions, std::span<const GroundTruthBox> ground_truths,
               double iou_threshold);

// 0.50, 0.55, ..., 0.95
std::vector<double> DefaultIouGrid();

struct ApSummary {
  double ap50 = 0.0;
  double ap75 = 0.0;
  double map = 0.0;  // mean over the grid
};

ApSummary SummarizeAp(std::span<const ScoredBox> predictions, std::span<const GroundTruthBox> ground_truths,
                      std::span<const double> iou_grid);

}  // namespace oilsense::metrics

#endif  // OILSENSE_METRICS_HPP_
