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
#ifndef OILSENSE_ENHANCE_HPP_
#define OILSENSE_ENHANCE_HPP_

#include <array>
#include <cstdint>
#include <variant>

#include "oilsense/image.hpp"

namespace oilsense::enhance {

using Lut = std::array<std::uint8_t, 256>;

struct YCrCbPlanes {
  GrayImage y;
  GrayImage cr;
  GrayImage cb;
};

// Full-range BT.601 with round-to-nearest and clamping.
YCrCbPlanes RgbToYCrCb(const ColorImage& img);
ColorImage YCrCbToRgb(const YCrCbPlanes& planes);

std::array<std::uint64_t, 256> Histogram(const GrayImage& img);
GrayImage ApplyLut(const GrayImage& img, const Lut& lut);

// lut[v] = round(255 * cdf(v)).
Lut ClassicHe(const GrayImage& img);

// Equalizes [0..split] onto [0..split] and [split+1..255] onto
// [split+1..255]. An empty sub-histogram leaves its range unchanged.
// split == 255 degenerates to ClassicHe.
Lut BiHe(const GrayImage& img, int split);

struct Metrics {
  double rbd = 0.0;  // |mean shift| / 255
  double rcd = 0.0;  // relative change of standard deviation
  double asd = 0.0;  // mean |Laplacian difference| / 255
};

Metrics ComputeMetrics(const GrayImage& input, const GrayImage& candidate);

struct ScoreParams {
  double k_brightness = 20.0;
  double k_detail = 20.0;
  double contrast_target = 0.5;
};

struct Scores {
  double bps = 0.0;
  double ocs = 0.0;
  double dps = 0.0;
};

Scores ComputeScores(const Metrics& m, const ScoreParams& params = {});

struct Weights {
  double brightness = 1.0;
  double contrast = 1.0;
  double detail = 1.0;
};

struct EnhanceReport {
  int split = 0;
  Metrics metrics;
  Scores scores;
  double aggregate = 0.0;
};

double Aggregate(const Scores& s, const Weights& w);

// Exhaustive search over split in 0..254, ties to the smaller split.
EnhanceReport OptimizeSplit(const GrayImage& img, const Weights& weights,
                            const ScoreParams& params = {});

struct EnhanceResult {
  AnyImage image;
  EnhanceReport report;
};

struct PlanesResult {
  YCrCbPlanes planes;
  EnhanceReport report;
};

// Color path before the inverse transform: only the Y plane is modified.
PlanesResult EnhancePlanes(const YCrCbPlanes& planes, const Weights& weights,
                           const ScoreParams& params = {});

EnhanceResult EnhanceImage(const AnyImage& img, const Weights& weights,
                           const ScoreParams& params = {});

}  // namespace oilsense::enhance

#endif  // OILSENSE_ENHANCE_HPP_
