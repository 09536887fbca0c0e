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
#include "oilsense/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "oilsense/error.hpp"

namespace oilsense::enhance {
namespace {

constexpr double kStdEpsilon = 1e-6;

std::uint8_t ClampRound(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Sum and sum of squares are exact integers; both the direct metric path and
// the histogram shortcut in OptimizeSplit reduce to these.
struct Moments {
  double mean;
  double stddev;
};

Moments MomentsFromSums(std::uint64_t n, std::uint64_t sum, std::uint64_t sum_sq) {
  const double dn = static_cast<double>(n);
  const double mean = static_cast<double>(sum) / dn;
  const double s = static_cast<double>(sum);
  const double var = std::max(0.0, (static_cast<double>(sum_sq) - s * s / dn) / dn);
  return {mean, std::sqrt(var)};
}

// 4-neighbour Laplacian with replicated border.
std::vector<int> Laplacian(const GrayImage& img) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  std::vector<int> out(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t up = r == 0 ? 0 : r - 1;
    const std::size_t down = r + 1 == h ? r : r + 1;
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t left = c == 0 ? 0 : c - 1;
      const std::size_t right = c + 1 == w ? c : c + 1;
      out[r * w + c] = img.at(up, c) + img.at(down, c) + img.at(r, left) + img.at(r, right) -
                       4 * img.at(r, c);
    }
  }
  return out;
}

Metrics MetricsFromParts(const Moments& in, const Moments& cand, std::int64_t lap_abs_sum,
                         std::size_t n) {
  Metrics m;
  m.rbd = std::abs(cand.mean - in.mean) / 255.0;
  m.rcd = (cand.stddev - in.stddev) / std::max(in.stddev, kStdEpsilon);
  m.asd = static_cast<double>(lap_abs_sum) / static_cast<double>(n) / 255.0;
  return m;
}

// Equalizes the histogram slice [lo..hi] onto the same output range.
void EqualizeRange(const std::array<std::uint64_t, 256>& hist, int lo, int hi, Lut& lut) {
  std::uint64_t total = 0;
  for (int v = lo; v <= hi; ++v) total += hist[v];
  if (total == 0) {
    for (int v = lo; v <= hi; ++v) lut[v] = static_cast<std::uint8_t>(v);
    return;
  }
  const double span = static_cast<double>(hi - lo);
  std::uint64_t cum = 0;
  for (int v = lo; v <= hi; ++v) {
    cum += hist[v];
    const double cdf = static_cast<double>(cum) / static_cast<double>(total);
    lut[v] = ClampRound(lo + span * cdf);
  }
}

}  // namespace

YCrCbPlanes RgbToYCrCb(const ColorImage& img) {
  YCrCbPlanes out{GrayImage(img.width(), img.height()), GrayImage(img.width(), img.height()),
                  GrayImage(img.width(), img.height())};
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      const double R = img.at(r, c)[0], G = img.at(r, c)[1], B = img.at(r, c)[2];
      out.y.at(r, c) = ClampRound(0.299 * R + 0.587 * G + 0.114 * B);
      out.cr.at(r, c) = ClampRound(128.0 + 0.5 * R - 0.418688 * G - 0.081312 * B);
      out.cb.at(r, c) = ClampRound(128.0 - 0.168736 * R - 0.331264 * G + 0.5 * B);
    }
  }
  return out;
}

ColorImage YCrCbToRgb(const YCrCbPlanes& planes) {
  const std::size_t w = planes.y.width();
  const std::size_t h = planes.y.height();
  if (planes.cr.width() != w || planes.cr.height() != h || planes.cb.width() != w ||
      planes.cb.height() != h) {
    ThrowData("YCrCb planes differ in size");
  }
  ColorImage out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double y = planes.y.at(r, c);
      const double cr = planes.cr.at(r, c) - 128.0;
      const double cb = planes.cb.at(r, c) - 128.0;
      out.at(r, c) = {ClampRound(y + 1.402 * cr), ClampRound(y - 0.344136 * cb - 0.714136 * cr),
                      ClampRound(y + 1.772 * cb)};
    }
  }
  return out;
}

std::array<std::uint64_t, 256> Histogram(const GrayImage& img) {
  std::array<std::uint64_t, 256> hist{};
  for (std::uint8_t v : img.pixels()) ++hist[v];
  return hist;
}

GrayImage ApplyLut(const GrayImage& img, const Lut& lut) {
  std::vector<std::uint8_t> px(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), px.begin(),
                 [&lut](std::uint8_t v) { return lut[v]; });
  return GrayImage(img.width(), img.height(), std::move(px));
}

Lut ClassicHe(const GrayImage& img) {
  if (img.empty()) ThrowData("histogram equalization of an empty image");
  Lut lut{};
  EqualizeRange(Histogram(img), 0, 255, lut);
  return lut;
}

Lut BiHe(const GrayImage& img, int split) {
  if (img.empty()) ThrowData("histogram equalization of an empty image");
  if (split < 0 || split > 255) ThrowUsage("bi-histogram split must be in 0..255");
  const auto hist = Histogram(img);
  Lut lut{};
  EqualizeRange(hist, 0, split, lut);
  if (split < 255) EqualizeRange(hist, split + 1, 255, lut);
  return lut;
}

Metrics ComputeMetrics(const GrayImage& input, const GrayImage& candidate) {
  if (input.width() != candidate.width() || input.height() != candidate.height()) {
    ThrowData("metrics: image dimensions differ");
  }
  if (input.empty()) ThrowData("metrics: empty image");
  std::uint64_t s_in = 0, q_in = 0, s_c = 0, q_c = 0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const std::uint64_t a = input.pixels()[i];
    const std::uint64_t b = candidate.pixels()[i];
    s_in += a;
    q_in += a * a;
    s_c += b;
    q_c += b * b;
  }
  const auto lap_in = Laplacian(input);
  const auto lap_c = Laplacian(candidate);
  std::int64_t lap_sum = 0;
  for (std::size_t i = 0; i < lap_in.size(); ++i) lap_sum += std::abs(lap_c[i] - lap_in[i]);
  return MetricsFromParts(MomentsFromSums(input.size(), s_in, q_in),
                          MomentsFromSums(input.size(), s_c, q_c), lap_sum, input.size());
}

Scores ComputeScores(const Metrics& m, const ScoreParams& params) {
  Scores s;
  s.bps = std::exp(-params.k_brightness * m.rbd);
  s.ocs = std::clamp(m.rcd / params.contrast_target, 0.0, 1.0);
  s.dps = std::exp(-params.k_detail * m.asd);
  return s;
}

double Aggregate(const Scores& s, const Weights& w) {
  return w.brightness * s.bps + w.contrast * s.ocs + w.detail * s.dps;
}

EnhanceReport OptimizeSplit(const GrayImage& img, const Weights& weights,
                            const ScoreParams& params) {
  if (img.empty()) ThrowData("cannot enhance an empty image");
  if (weights.brightness < 0 || weights.contrast < 0 || weights.detail < 0 ||
      weights.brightness + weights.contrast + weights.detail <= 0) {
    ThrowUsage("enhancement weights must be non-negative and not all zero");
  }
  const auto hist = Histogram(img);
  std::uint64_t s_in = 0, q_in = 0;
  for (std::uint64_t v = 0; v < 256; ++v) {
    s_in += hist[v] * v;
    q_in += hist[v] * v * v;
  }
  const Moments in_moments = MomentsFromSums(img.size(), s_in, q_in);
  const auto lap_in = Laplacian(img);

  EnhanceReport best;
  bool have_best = false;
  for (int t = 0; t <= 254; ++t) {
    const Lut lut = BiHe(img, t);
    std::uint64_t s_c = 0, q_c = 0;
    for (std::uint64_t v = 0; v < 256; ++v) {
      const std::uint64_t m = lut[v];
      s_c += hist[v] * m;
      q_c += hist[v] * m * m;
    }
    const auto lap_c = Laplacian(ApplyLut(img, lut));
    std::int64_t lap_sum = 0;
    for (std::size_t i = 0; i < lap_in.size(); ++i) lap_sum += std::abs(lap_c[i] - lap_in[i]);

    EnhanceReport rep;
    rep.split = t;
    rep.metrics = MetricsFromParts(in_moments, MomentsFromSums(img.size(), s_c, q_c), lap_sum,
                                   img.size());
    rep.scores = ComputeScores(rep.metrics, params);
    rep.aggregate = Aggregate(rep.scores, weights);
    if (!have_best || rep.aggregate > best.aggregate) {
      best = rep;
      have_best = true;
    }
  }
  return best;
}

PlanesResult EnhancePlanes(const YCrCbPlanes& planes, const Weights& weights,
                           const ScoreParams& params) {
  PlanesResult out{planes, OptimizeSplit(planes.y, weights, params)};
  out.planes.y = ApplyLut(planes.y, BiHe(planes.y, out.report.split));
  return out;
}

EnhanceResult EnhanceImage(const AnyImage& img, const Weights& weights,
                           const ScoreParams& params) {
  if (const auto* gray = std::get_if<GrayImage>(&img)) {
    EnhanceReport report = OptimizeSplit(*gray, weights, params);
    return {ApplyLut(*gray, BiHe(*gray, report.split)), report};
  }
  const auto& color = std::get<ColorImage>(img);
  PlanesResult enhanced = EnhancePlanes(RgbToYCrCb(color), weights, params);
  return {YCrCbToRgb(enhanced.planes), enhanced.report};
}

}  // namespace oilsense::enhance
