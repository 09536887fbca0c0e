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
#include "oilsense/relnet.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oilsense/error.hpp"
#include "oilsense/scenegen.hpp"
#include "test_util.hpp"

namespace oilsense::relnet {
namespace {

using testing::Rect;

RelNetConfig TinyConfig(InputVariant v = InputVariant::kFull) {
  RelNetConfig c;
  c.conv1_filters = 4;
  c.conv2_filters = 4;
  c.fc1_width = 8;
  c.fc2_width = 8;
  c.variant = v;
  return c;
}

// Continuous-valued inputs keep max-pool windows free of ties.
PairSample RandomSample(std::mt19937_64& rng, std::size_t grid = 28) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PairSample s;
  std::vector<double> px(grid * grid);
  for (double& v : px) v = u(rng);
  s.raster = MaskRaster(grid, grid, px);
  for (double& v : s.v_poi) v = 2 * u(rng) - 1;
  for (double& v : s.v_cls) v = u(rng) < 0.3 ? 1.0 : 0.0;
  s.label = static_cast<RelationLabel>(rng() % 3);
  return s;
}

void RandomizeBiases(RelNetParams& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  p.ForEach([&](std::string_view, Tensor& t, bool is_bias) {
    if (is_bias) {
      for (double& v : t.data) v = u(rng);
    }
  });
}

TEST(RelNetConfigTest, FullShapes) {
  const RelNetConfig c;
  EXPECT_EQ(c.pool1_size(), 14u);
  EXPECT_EQ(c.conv2_size(), 6u);
  EXPECT_EQ(c.pool2_size(), 3u);
  EXPECT_EQ(c.contour_features(), 3u * 3u * 256u);
  EXPECT_NO_THROW(c.Validate());
  RelNetConfig odd;
  odd.grid = 27;
  EXPECT_THROW(odd.Validate(), Error);
}

TEST(InitParamsTest, DeterministicFiniteZeroBias) {
  const RelNetConfig c = TinyConfig();
  const RelNetParams a = InitParams(c, 5), b = InitParams(c, 5), d = InitParams(c, 6);
  EXPECT_EQ(a, b);
  EXPECT_NE(a.conv1_w, d.conv1_w);
  EXPECT_NE(a.fc2_w, d.fc2_w);
  a.ForEach([](std::string_view name, const Tensor& t, bool is_bias) {
    for (double v : t.data) {
      ASSERT_TRUE(std::isfinite(v)) << name;
      if (is_bias) ASSERT_EQ(v, 0.0) << name;
    }
  });
  EXPECT_EQ(a.conv2_w.shape, (std::vector<std::size_t>{4, 4, 3, 3}));
  EXPECT_EQ(a.fc2_w.shape, (std::vector<std::size_t>{8, 8 + 4 * 9}));
}

TEST(ForwardTest, FullConfigShapeChain) {
  const RelNetConfig c;
  const RelNetParams p = InitParams(c, 1);
  std::mt19937_64 rng(1);
  const RelNetActivations a = Forward(p, RandomSample(rng));
  EXPECT_EQ(a.m_ctr1_shape, (Shape3{14, 14, 256}));
  EXPECT_EQ(a.m_ctr2_shape, (Shape3{3, 3, 256}));
  EXPECT_EQ(a.m_ctr1.size(), 14u * 14u * 256u);
  EXPECT_EQ(a.m_ctr2.size(), 3u * 3u * 256u);
  EXPECT_EQ(a.v1.size(), 1024u);
  EXPECT_EQ(a.v2.size(), 256u);
  EXPECT_EQ(p.fc1_w.shape, (std::vector<std::size_t>{1024, 16}));
  EXPECT_EQ(p.fc2_w.shape, (std::vector<std::size_t>{256, 1024 + 2304}));
  EXPECT_EQ(p.head_w.shape, (std::vector<std::size_t>{3, 256}));
}

TEST(ForwardTest, ZeroParamsGiveUniform) {
  const RelNetParams p = RelNetParams::Zeros(TinyConfig());
  std::mt19937_64 rng(2);
  const PairSample s = RandomSample(rng);
  const auto a = Forward(p, s);
  for (double y : a.y) EXPECT_DOUBLE_EQ(y, 1.0 / 3.0);
  const std::vector<PairSample> batch{s};
  EXPECT_NEAR(ComputeLoss(p, batch), std::log(3.0), 1e-15);
}

TEST(ForwardTest, HeadShiftInvarianceAndPurity) {
  std::mt19937_64 rng(3);
  RelNetParams p = InitParams(TinyConfig(), 3);
  const PairSample s = RandomSample(rng);
  const auto a = Forward(p, s);
  const auto again = Forward(p, s);
  EXPECT_EQ(a.y, again.y);
  EXPECT_EQ(a.m_ctr2, again.m_ctr2);
  for (double& b : p.head_b.data) b += 2.5;
  const auto shifted = Forward(p, s);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(shifted.y[k], a.y[k], 1e-12);
  EXPECT_NEAR(std::accumulate(a.y.begin(), a.y.end(), 0.0), 1.0, 1e-9);
  for (double y : a.y) {
    EXPECT_GT(y, 0.0);
    EXPECT_LT(y, 1.0);
  }
}

TEST(ForwardTest, RasterSizeMismatch) {
  std::mt19937_64 rng(4);
  const RelNetParams p = InitParams(TinyConfig(), 1);
  EXPECT_THROW(Forward(p, RandomSample(rng, 20)), Error);
}

TEST(ForwardTest, ExcludedBranchesAreIgnored) {
  std::mt19937_64 rng(5);
  const RelNetParams pos = InitParams(TinyConfig(InputVariant::kPosition), 1);
  const RelNetParams typ = InitParams(TinyConfig(InputVariant::kPositionType), 1);
  const PairSample s = RandomSample(rng);
  PairSample no_raster = s, no_class = s;
  no_raster.raster = MaskRaster(28, 28);
  no_class.v_cls.fill(0.0);
  EXPECT_EQ(Forward(pos, s).y, Forward(pos, no_raster).y);
  EXPECT_EQ(Forward(pos, s).y, Forward(pos, no_class).y);
  EXPECT_EQ(Forward(typ, s).y, Forward(typ, no_raster).y);
  EXPECT_NE(Forward(typ, s).y, Forward(typ, no_class).y);
}

TEST(LossTest, ConfidentCorrectSampleHasZeroLoss) {
  RelNetParams p = RelNetParams::Zeros(TinyConfig());
  p.head_b.data = {2000.0, 0.0, 0.0};
  std::mt19937_64 rng(6);
  PairSample s = RandomSample(rng);
  s.label = RelationLabel::kAbove;
  const std::vector<PairSample> batch{s};
  EXPECT_EQ(ComputeLoss(p, batch), 0.0);
  EXPECT_THROW(ComputeLossAndGrad(p, std::span<const PairSample>()), Error);
}

// Central differences against the analytic gradient for every parameter.
void CheckGradients(RelNetParams params, const std::vector<PairSample>& batch) {
  const double h = 1e-5;
  const LossAndGrad analytic = ComputeLossAndGrad(params, batch);
  EXPECT_NEAR(analytic.loss, ComputeLoss(params, batch), 1e-14);
  std::vector<const Tensor*> grads;
  analytic.grads.ForEach([&](std::string_view, const Tensor& t, bool) { grads.push_back(&t); });
  std::size_t checked = 0, kinks = 0, ti = 0;
  double worst = 0.0;
  std::vector<Tensor*> tensors;
  params.ForEach([&](std::string_view, Tensor& t, bool) { tensors.push_back(&t); });
  std::vector<std::string> names;
  params.ForEach([&](std::string_view n, const Tensor&, bool) { names.emplace_back(n); });
  const double f0 = analytic.loss;
  for (Tensor* t : tensors) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double keep = t->data[i];
      t->data[i] = keep + h;
      const double fp = ComputeLoss(params, batch);
      t->data[i] = keep - h;
      const double fm = ComputeLoss(params, batch);
      t->data[i] = keep;
      // A ReLU or pooling switch inside [-h, h] makes the point degenerate.
      const double curvature = std::abs((fp - f0) - (f0 - fm));
      if (curvature > 1e-6 * std::max(1e-3, std::abs(fp - fm))) {
        ++kinks;
        continue;
      }
      const double numeric = (fp - fm) / (2 * h);
      const double a = grads[ti]->data[i];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double err = scale < 1e-8 ? 0.0 : std::abs(a - numeric) / scale;
      worst = std::max(worst, err);
      EXPECT_LT(err, 1e-4) << names[ti] << "[" << i << "] analytic " << a << " numeric " << numeric;
      ++checked;
    }
    ++ti;
  }
  EXPECT_GT(checked, 0u);
  EXPECT_LE(kinks, checked / 100) << "too many degenerate coordinates";
}

TEST(GradientTest, MatchesFiniteDifferencesAcrossSeeds) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SCOPED_TRACE(seed);
    std::mt19937_64 rng(seed * 101);
    RelNetParams p = InitParams(TinyConfig(), seed);
    RandomizeBiases(p, rng);
    std::vector<PairSample> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(RandomSample(rng));
    CheckGradients(p, batch);
  }
}

TEST(GradientTest, ReducedVariants) {
  for (InputVariant v : {InputVariant::kPosition, InputVariant::kPositionType}) {
    std::mt19937_64 rng(77);
    RelNetParams p = InitParams(TinyConfig(v), 9);
    RandomizeBiases(p, rng);
    CheckGradients(p, {RandomSample(rng), RandomSample(rng)});
  }
}

TEST(PredictTest, ArgmaxAndTies) {
  EXPECT_EQ(ArgmaxRelation({0.6, 0.3, 0.1}), RelationLabel::kAbove);
  EXPECT_EQ(ArgmaxRelation({1.0 / 3, 1.0 / 3, 1.0 / 3}), RelationLabel::kAbove);
  EXPECT_EQ(ArgmaxRelation({0.2, 0.4, 0.4}), RelationLabel::kNearby);
  EXPECT_EQ(ArgmaxRelation({0.1, 0.2, 0.7}), RelationLabel::kOther);
  std::mt19937_64 rng(8);
  const PairSample s = RandomSample(rng);
  EXPECT_EQ(Predict(RelNetParams::Zeros(TinyConfig()), s).label, RelationLabel::kAbove);
}

TEST(PairSampleTest, EncodingValues) {
  const auto subject = Rect(0, ClassLabel::kSuspectedArea, 0.9, 10, 10, 20, 20);
  const auto reference = Rect(1, ClassLabel::kGround, 0.9, 15, 15, 40, 30);
  const PairSample s = MakePairSample(subject, reference, 100, 100);
  int ones = 0, halves = 0;
  for (double v : s.raster.values()) {
    ASSERT_TRUE(v == 0.0 || v == 0.5 || v == 1.0);
    ones += v == 1.0;
    halves += v == 0.5;
  }
  EXPECT_GT(ones, 0);
  EXPECT_GT(halves, ones);
  EXPECT_EQ(s.v_poi, PositionVector(subject, reference, 100, 100));
  EXPECT_EQ(s.v_cls, ClassVector(ClassLabel::kSuspectedArea, ClassLabel::kGround));
}

// Pairs whose relation is fixed by where the subject sits: on top of the
// reference, beside it, or far away.
std::vector<PairSample> SeparablePairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double W = 320, H = 240;
  std::vector<PairSample> out;
  while (out.size() < n) {
    const auto kind = static_cast<RelationLabel>(out.size() % 3);
    const double rw = 40 + 40 * u(rng), rh = 20 + 20 * u(rng);
    const double rx = 100 + 60 * u(rng), ry = 120 + 40 * u(rng);
    const double sw = 20 + 20 * u(rng), sh = 10 + 10 * u(rng);
    double sx = rx + (rw - sw) / 2, sy = ry - sh;
    if (kind == RelationLabel::kNearby) {
      sx = rx + rw + 10 + 10 * u(rng);
      sy = ry + (rh - sh) / 2;
    } else if (kind == RelationLabel::kOther) {
      sx = u(rng) < 0.5 ? 2 + 10 * u(rng) : W - sw - 2 - 10 * u(rng);
      sy = 2 + 5 * u(rng);
    }
    const auto subject = Rect(0, ClassLabel::kSuspectedArea, 0.9, sx, sy, sx + sw, sy + sh);
    const auto reference = Rect(1, ClassLabel::kGround, 0.9, rx, ry, rx + rw, ry + rh);
    if (scenegen::LabelRelationOracle(subject, reference, W, H) != kind) continue;
    PairSample s = MakePairSample(subject, reference, W, H);
    s.label = kind;
    out.push_back(s);
  }
  return out;
}

TEST(TrainTest, LearnsSeparablePairs) {
  const std::vector<PairSample> data = SeparablePairs(200, 21);
  TrainConfig cfg;
  cfg.epochs = 20;
  const TrainResult r = Train(InitParams(TinyConfig(), 1), data, cfg);
  ASSERT_EQ(r.history.size(), 20u);
  EXPECT_LT(r.history.back().loss, r.history.front().loss);
  std::size_t correct = 0;
  for (const auto& s : data) correct += Predict(r.params, s).label == s.label;
  EXPECT_GE(static_cast<double>(correct) / data.size(), 0.95);
}

TEST(TrainTest, ZeroLearningRateOnlyShrinksWeights) {
  std::mt19937_64 rng(10);
  std::vector<PairSample> data;
  for (int i = 0; i < 10; ++i) data.push_back(RandomSample(rng));
  RelNetParams start = InitParams(TinyConfig(), 2);
  RandomizeBiases(start, rng);
  TrainConfig cfg;
  cfg.lr_initial = cfg.lr_final = 0.0;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.weight_decay = 0.01;
  const TrainResult r = Train(start, data, cfg);
  const std::size_t steps = 3 * 3;
  RelNetParams expected = start;
  expected.ForEach([&](std::string_view, Tensor& t, bool is_bias) {
    if (is_bias) return;
    for (double& v : t.data) {
      for (std::size_t s = 0; s < steps; ++s) v *= 0.99;
    }
  });
  EXPECT_EQ(r.params, expected);
}

TEST(TrainTest, DeterministicHistory) {
  std::mt19937_64 rng(11);
  std::vector<PairSample> data;
  for (int i = 0; i < 40; ++i) data.push_back(RandomSample(rng));
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  const TrainResult a = Train(InitParams(TinyConfig(), 4), data, cfg);
  const TrainResult b = Train(InitParams(TinyConfig(), 4), data, cfg);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].loss, b.history[i].loss);
    EXPECT_EQ(a.history[i].train_accuracy, b.history[i].train_accuracy);
  }
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(LossHistoryCsv(a.history), LossHistoryCsv(b.history));
  EXPECT_EQ(LossHistoryCsv(a.history).rfind("epoch,loss,train_acc\n", 0), 0u);
}

TEST(TrainTest, Errors) {
  std::mt19937_64 rng(12);
  std::vector<PairSample> one_class;
  for (int i = 0; i < 5; ++i) {
    one_class.push_back(RandomSample(rng));
    one_class.back().label = RelationLabel::kOther;
  }
  EXPECT_THROW(Train(InitParams(TinyConfig(), 1), one_class, {}), Error);
  EXPECT_THROW(Train(InitParams(TinyConfig(), 1), std::span<const PairSample>(), {}), Error);
  std::vector<PairSample> data = one_class;
  data[0].label = RelationLabel::kAbove;
  TrainConfig wild;
  wild.lr_initial = wild.lr_final = 1e300;
  wild.epochs = 5;
  try {
    Train(InitParams(TinyConfig(), 1), data, wild);
    ADD_FAILURE() << "expected a numeric failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("learning rate"), std::string::npos);
  }
  TrainConfig bad;
  bad.epochs = 0;
  EXPECT_THROW(Train(InitParams(TinyConfig(), 1), data, bad), Error);
}

TEST(WeightFileTest, RoundTrip) {
  std::mt19937_64 rng(13);
  RelNetParams p = InitParams(TinyConfig(InputVariant::kPositionType), 7);
  RandomizeBiases(p, rng);
  EXPECT_EQ(ParseParams(SerializeParams(p)), p);
  const auto dir = oilsense::testing::TempDir("weights");
  SaveParams(p, (dir / "w.json").string());
  EXPECT_EQ(LoadParams((dir / "w.json").string()), p);
}

TEST(WeightFileTest, TruncatedVersionAndShapeErrors) {
  const RelNetParams p = InitParams(TinyConfig(), 7);
  const std::string text = SerializeParams(p);
  EXPECT_THROW(ParseParams(text.substr(0, text.size() / 2)), Error);
  std::string wrong_version = text;
  const auto pos = wrong_version.find("\"version\":1");
  ASSERT_NE(pos, std::string::npos);
  wrong_version.replace(pos, 11, "\"version\":9");
  EXPECT_THROW(ParseParams(wrong_version), Error);

  RelNetConfig other = TinyConfig();
  other.fc2_width = 16;
  try {
    ParseParams(text, other);
    ADD_FAILURE() << "expected a shape mismatch";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("fc2.weight"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace oilsense::relnet
