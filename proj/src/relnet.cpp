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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "oilsense/error.hpp"

namespace oilsense::relnet {
namespace {

constexpr std::array<std::string_view, kNumRelations> kRelationNames = {"above", "nearby",
                                                                        "other"};
constexpr std::array<std::string_view, 3> kVariantNames = {"position", "position_type", "full"};
constexpr std::size_t kKernel = 3;
constexpr std::size_t kKernelArea = kKernel * kKernel;

// Cached intermediates of one forward pass, consumed by Backward().
struct Trace {
  std::vector<double> input;       // grid*grid, after variant masking
  std::vector<double> conv1;       // F1 x G x G, post-ReLU
  std::vector<double> pool1;       // F1 x P1 x P1
  std::vector<std::uint32_t> pool1_arg;
  std::vector<double> cols2;       // (F1*9) x (C2*C2)
  std::vector<double> conv2;       // F2 x C2 x C2, post-ReLU
  std::vector<double> pool2;       // F2 x P2 x P2
  std::vector<std::uint32_t> pool2_arg;
  std::array<double, kPositionVectorSize + kClassVectorSize> vec_in{};
  std::vector<double> v1;          // post-ReLU
  std::vector<double> fc2_in;      // v1 ++ pool2
  std::vector<double> v2;          // post-ReLU
  std::array<double, kNumRelations> logits{};
  std::array<double, kNumRelations> y{};
};

void MaxPool2x2(const std::vector<double>& in, std::size_t channels, std::size_t size,
                std::vector<double>& out, std::vector<std::uint32_t>& arg) {
  const std::size_t out_size = size / 2;
  out.assign(channels * out_size * out_size, 0.0);
  arg.assign(out.size(), 0);
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = in.data() + c * size * size;
    for (std::size_t i = 0; i < out_size; ++i) {
      for (std::size_t j = 0; j < out_size; ++j) {
        std::size_t best = (2 * i) * size + 2 * j;
        for (std::size_t di = 0; di < 2; ++di) {
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t idx = (2 * i + di) * size + (2 * j + dj);
            if (plane[idx] > plane[best]) best = idx;
          }
        }
        const std::size_t o = c * out_size * out_size + i * out_size + j;
        out[o] = plane[best];
        arg[o] = static_cast<std::uint32_t>(c * size * size + best);
      }
    }
  }
}

// y = relu(W x + b); W is [out][in] row-major.
void DenseRelu(const Tensor& w, const Tensor& b, std::span<const double> x, std::vector<double>& y) {
  const std::size_t out = b.size();
  const std::size_t in = x.size();
  y.assign(out, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double* row = w.data.data() + o * in;
    double acc = b.data[o];
    for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc > 0.0 ? acc : 0.0;
  }
}

void RunForward(const RelNetParams& p, const PairSample& s, Trace& t) {
  const RelNetConfig& cfg = p.config;
  const std::size_t g = cfg.grid;
  const std::size_t f1 = cfg.conv1_filters;
  const std::size_t f2 = cfg.conv2_filters;
  const std::size_t p1 = cfg.pool1_size();
  const std::size_t c2 = cfg.conv2_size();
  if (s.raster.width() != g || s.raster.height() != g) {
    ThrowData("pair raster is " + std::to_string(s.raster.width()) + "x" +
              std::to_string(s.raster.height()) + ", network expects " + std::to_string(g) + "x" +
              std::to_string(g));
  }

  const bool use_contour = cfg.variant == InputVariant::kFull;
  const bool use_type = cfg.variant != InputVariant::kPosition;

  // Zero-padded input plane.
  const std::size_t gp = g + 2;
  t.input.assign(gp * gp, 0.0);
  if (use_contour) {
    for (std::size_t r = 0; r < g; ++r) {
      for (std::size_t c = 0; c < g; ++c) t.input[(r + 1) * gp + (c + 1)] = s.raster.at(r, c);
    }
  }

  // conv1, same padding, then ReLU.
  t.conv1.assign(f1 * g * g, 0.0);
  for (std::size_t f = 0; f < f1; ++f) {
    double* out = t.conv1.data() + f * g * g;
    std::fill(out, out + g * g, p.conv1_b.data[f]);
    for (std::size_t ki = 0; ki < kKernel; ++ki) {
      for (std::size_t kj = 0; kj < kKernel; ++kj) {
        const double w = p.conv1_w.data[f * kKernelArea + ki * kKernel + kj];
        for (std::size_t r = 0; r < g; ++r) {
          const double* in_row = t.input.data() + (r + ki) * gp + kj;
          double* out_row = out + r * g;
          for (std::size_t c = 0; c < g; ++c) out_row[c] += w * in_row[c];
        }
      }
    }
    for (std::size_t i = 0; i < g * g; ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  }
  MaxPool2x2(t.conv1, f1, g, t.pool1, t.pool1_arg);

  // conv2, stride 2 valid, as im2col + GEMM.
  const std::size_t npix = c2 * c2;
  t.cols2.assign(f1 * kKernelArea * npix, 0.0);
  for (std::size_t f = 0; f < f1; ++f) {
    const double* plane = t.pool1.data() + f * p1 * p1;
    for (std::size_t ki = 0; ki < kKernel; ++ki) {
      for (std::size_t kj = 0; kj < kKernel; ++kj) {
        double* col = t.cols2.data() + ((f * kKernelArea) + ki * kKernel + kj) * npix;
        for (std::size_t i = 0; i < c2; ++i) {
          for (std::size_t j = 0; j < c2; ++j) col[i * c2 + j] = plane[(2 * i + ki) * p1 + 2 * j + kj];
        }
      }
    }
  }
  const std::size_t k2 = f1 * kKernelArea;
  t.conv2.assign(f2 * npix, 0.0);
  for (std::size_t o = 0; o < f2; ++o) {
    double* out = t.conv2.data() + o * npix;
    std::fill(out, out + npix, p.conv2_b.data[o]);
    const double* wrow = p.conv2_w.data.data() + o * k2;
    for (std::size_t k = 0; k < k2; ++k) {
      const double w = wrow[k];
      const double* col = t.cols2.data() + k * npix;
      for (std::size_t q = 0; q < npix; ++q) out[q] += w * col[q];
    }
    for (std::size_t q = 0; q < npix; ++q) out[q] = out[q] > 0.0 ? out[q] : 0.0;
  }
  MaxPool2x2(t.conv2, f2, c2, t.pool2, t.pool2_arg);

  // Vector branch.
  for (std::size_t i = 0; i < kPositionVectorSize; ++i) t.vec_in[i] = s.v_poi[i];
  for (std::size_t i = 0; i < kClassVectorSize; ++i) {
    t.vec_in[kPositionVectorSize + i] = use_type ? s.v_cls[i] : 0.0;
  }
  DenseRelu(p.fc1_w, p.fc1_b, t.vec_in, t.v1);

  t.fc2_in.resize(t.v1.size() + t.pool2.size());
  std::copy(t.v1.begin(), t.v1.end(), t.fc2_in.begin());
  std::copy(t.pool2.begin(), t.pool2.end(), t.fc2_in.begin() + static_cast<std::ptrdiff_t>(t.v1.size()));
  DenseRelu(p.fc2_w, p.fc2_b, t.fc2_in, t.v2);

  const std::size_t h = cfg.fc2_width;
  for (std::size_t k = 0; k < kNumRelations; ++k) {
    double acc = p.head_b.data[k];
    const double* row = p.head_w.data.data() + k * h;
    for (std::size_t i = 0; i < h; ++i) acc += row[i] * t.v2[i];
    t.logits[k] = acc;
  }
  const double m = *std::max_element(t.logits.begin(), t.logits.end());
  double z = 0.0;
  for (std::size_t k = 0; k < kNumRelations; ++k) {
    t.y[k] = std::exp(t.logits[k] - m);
    z += t.y[k];
  }
  for (double& v : t.y) v /= z;
}

// Accumulates scale * d(-log y[label]) into `g`.
void RunBackward(const RelNetParams& p, const Trace& t, RelationLabel label, double scale,
                 RelNetParams& g) {
  const RelNetConfig& cfg = p.config;
  const std::size_t grid = cfg.grid;
  const std::size_t gp = grid + 2;
  const std::size_t f1 = cfg.conv1_filters;
  const std::size_t f2 = cfg.conv2_filters;
  const std::size_t p1 = cfg.pool1_size();
  const std::size_t c2 = cfg.conv2_size();
  const std::size_t npix = c2 * c2;
  const std::size_t k2 = f1 * kKernelArea;
  const std::size_t h1 = cfg.fc1_width;
  const std::size_t h2 = cfg.fc2_width;

  std::array<double, kNumRelations> dlogits{};
  for (std::size_t k = 0; k < kNumRelations; ++k) {
    dlogits[k] = scale * (t.y[k] - (k == static_cast<std::size_t>(label) ? 1.0 : 0.0));
  }

  // Head.
  std::vector<double> dv2(h2, 0.0);
  for (std::size_t k = 0; k < kNumRelations; ++k) {
    g.head_b.data[k] += dlogits[k];
    double* gw = g.head_w.data.data() + k * h2;
    const double* w = p.head_w.data.data() + k * h2;
    for (std::size_t i = 0; i < h2; ++i) {
      gw[i] += dlogits[k] * t.v2[i];
      dv2[i] += w[i] * dlogits[k];
    }
  }

  // fc2 (ReLU gate on v2).
  const std::size_t in2 = t.fc2_in.size();
  std::vector<double> din2(in2, 0.0);
  for (std::size_t o = 0; o < h2; ++o) {
    if (t.v2[o] <= 0.0) continue;
    const double d = dv2[o];
    g.fc2_b.data[o] += d;
    double* gw = g.fc2_w.data.data() + o * in2;
    const double* w = p.fc2_w.data.data() + o * in2;
    for (std::size_t i = 0; i < in2; ++i) {
      gw[i] += d * t.fc2_in[i];
      din2[i] += w[i] * d;
    }
  }

  // fc1.
  const std::size_t in1 = t.vec_in.size();
  for (std::size_t o = 0; o < h1; ++o) {
    if (t.v1[o] <= 0.0) continue;
    const double d = din2[o];
    g.fc1_b.data[o] += d;
    double* gw = g.fc1_w.data.data() + o * in1;
    for (std::size_t i = 0; i < in1; ++i) gw[i] += d * t.vec_in[i];
  }

  // pool2 -> conv2 (post-ReLU positions), gated.
  std::vector<double> dconv2(f2 * npix, 0.0);
  for (std::size_t i = 0; i < t.pool2.size(); ++i) {
    const std::uint32_t a = t.pool2_arg[i];
    if (t.conv2[a] > 0.0) dconv2[a] += din2[h1 + i];
  }

  // conv2 weights and input columns.
  std::vector<double> dcols(k2 * npix, 0.0);
  for (std::size_t o = 0; o < f2; ++o) {
    const double* d = dconv2.data() + o * npix;
    double bsum = 0.0;
    for (std::size_t q = 0; q < npix; ++q) bsum += d[q];
    if (bsum == 0.0 && std::all_of(d, d + npix, [](double v) { return v == 0.0; })) continue;
    g.conv2_b.data[o] += bsum;
    double* gw = g.conv2_w.data.data() + o * k2;
    const double* w = p.conv2_w.data.data() + o * k2;
    for (std::size_t k = 0; k < k2; ++k) {
      const double* col = t.cols2.data() + k * npix;
      double* dcol = dcols.data() + k * npix;
      double acc = 0.0;
      for (std::size_t q = 0; q < npix; ++q) {
        acc += d[q] * col[q];
        dcol[q] += w[k] * d[q];
      }
      gw[k] += acc;
    }
  }

  // col2im -> pool1 gradient.
  std::vector<double> dpool1(f1 * p1 * p1, 0.0);
  for (std::size_t f = 0; f < f1; ++f) {
    double* plane = dpool1.data() + f * p1 * p1;
    for (std::size_t ki = 0; ki < kKernel; ++ki) {
      for (std::size_t kj = 0; kj < kKernel; ++kj) {
        const double* dcol = dcols.data() + ((f * kKernelArea) + ki * kKernel + kj) * npix;
        for (std::size_t i = 0; i < c2; ++i) {
          for (std::size_t j = 0; j < c2; ++j) plane[(2 * i + ki) * p1 + 2 * j + kj] += dcol[i * c2 + j];
        }
      }
    }
  }

  // pool1 -> conv1, gated.
  std::vector<double> dconv1(f1 * grid * grid, 0.0);
  for (std::size_t i = 0; i < dpool1.size(); ++i) {
    const std::uint32_t a = t.pool1_arg[i];
    if (t.conv1[a] > 0.0) dconv1[a] += dpool1[i];
  }

  // conv1 weights.
  for (std::size_t f = 0; f < f1; ++f) {
    const double* d = dconv1.data() + f * grid * grid;
    double bsum = 0.0;
    for (std::size_t i = 0; i < grid * grid; ++i) bsum += d[i];
    g.conv1_b.data[f] += bsum;
    for (std::size_t ki = 0; ki < kKernel; ++ki) {
      for (std::size_t kj = 0; kj < kKernel; ++kj) {
        double acc = 0.0;
        for (std::size_t r = 0; r < grid; ++r) {
          const double* in_row = t.input.data() + (r + ki) * gp + kj;
          const double* d_row = d + r * grid;
          for (std::size_t c = 0; c < grid; ++c) acc += d_row[c] * in_row[c];
        }
        g.conv1_w.data[f * kKernelArea + ki * kKernel + kj] += acc;
      }
    }
  }
}

double CrossEntropy(const Trace& t, RelationLabel label) {
  // log-softmax directly from logits keeps precision when y[label] is tiny.
  const double m = *std::max_element(t.logits.begin(), t.logits.end());
  double z = 0.0;
  for (double l : t.logits) z += std::exp(l - m);
  return -(t.logits[static_cast<std::size_t>(label)] - m - std::log(z));
}

}  // namespace

std::string_view RelationName(RelationLabel label) {
  return kRelationNames[static_cast<std::size_t>(label)];
}

RelationLabel ParseRelationName(std::string_view name) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i) {
    if (kRelationNames[i] == name) return static_cast<RelationLabel>(i);
  }
  ThrowData("unknown relation \"" + std::string(name) + "\"");
}

std::string_view VariantName(InputVariant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

InputVariant ParseVariantName(std::string_view name) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == name) return static_cast<InputVariant>(i);
  }
  ThrowUsage("unknown input variant \"" + std::string(name) +
             "\" (expected position, position_type or full)");
}

void RelNetConfig::Validate() const {
  if (grid < 8 || grid % 2 != 0) ThrowUsage("relnet grid must be even and >= 8");
  if (conv1_filters == 0 || conv2_filters == 0 || fc1_width == 0 || fc2_width == 0) {
    ThrowUsage("relnet layer widths must be positive");
  }
  if (pool2_size() == 0) ThrowUsage("relnet grid too small for the conv chain");
}

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  data.assign(n, 0.0);
}

RelNetParams RelNetParams::Zeros(const RelNetConfig& c) {
  c.Validate();
  RelNetParams p;
  p.config = c;
  p.conv1_w = Tensor({c.conv1_filters, 1, kKernel, kKernel});
  p.conv1_b = Tensor({c.conv1_filters});
  p.conv2_w = Tensor({c.conv2_filters, c.conv1_filters, kKernel, kKernel});
  p.conv2_b = Tensor({c.conv2_filters});
  p.fc1_w = Tensor({c.fc1_width, c.vector_inputs()});
  p.fc1_b = Tensor({c.fc1_width});
  p.fc2_w = Tensor({c.fc2_width, c.fc1_width + c.contour_features()});
  p.fc2_b = Tensor({c.fc2_width});
  p.head_w = Tensor({kNumRelations, c.fc2_width});
  p.head_b = Tensor({kNumRelations});
  return p;
}

void RelNetParams::ForEach(
    const std::function<void(std::string_view, Tensor&, bool)>& fn) {
  fn("conv1.weight", conv1_w, false);
  fn("conv1.bias", conv1_b, true);
  fn("conv2.weight", conv2_w, false);
  fn("conv2.bias", conv2_b, true);
  fn("fc1.weight", fc1_w, false);
  fn("fc1.bias", fc1_b, true);
  fn("fc2.weight", fc2_w, false);
  fn("fc2.bias", fc2_b, true);
  fn("head.weight", head_w, false);
  fn("head.bias", head_b, true);
}

void RelNetParams::ForEach(
    const std::function<void(std::string_view, const Tensor&, bool)>& fn) const {
  const_cast<RelNetParams*>(this)->ForEach(
      [&fn](std::string_view name, Tensor& t, bool is_bias) { fn(name, t, is_bias); });
}

std::size_t RelNetParams::ParameterCount() const {
  std::size_t n = 0;
  ForEach([&n](std::string_view, const Tensor& t, bool) { n += t.size(); });
  return n;
}

RelNetParams InitParams(const RelNetConfig& config, std::uint64_t seed) {
  RelNetParams p = RelNetParams::Zeros(config);
  std::mt19937_64 rng(seed);
  p.ForEach([&rng](std::string_view, Tensor& t, bool is_bias) {
    if (is_bias) return;
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < t.shape.size(); ++i) fan_in *= t.shape[i];
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (double& v : t.data) v = dist(rng);
  });
  return p;
}

PairSample MakePairSample(const DetectedObject& subject, const DetectedObject& reference,
                          double image_width, double image_height, std::size_t grid) {
  PairSample s;
  const BBox frame = BBox::Union(subject.bbox, reference.bbox).Expanded(0.1);
  const MaskRaster sub = Rasterize(subject.polygon, frame, grid, grid);
  const MaskRaster ref = Rasterize(reference.polygon, frame, grid, grid);
  s.raster = MaskRaster(grid, grid);
  for (std::size_t r = 0; r < grid; ++r) {
    for (std::size_t c = 0; c < grid; ++c) {
      if (sub.at(r, c) > 0.0) {
        s.raster.set(r, c, 1.0);
      } else if (ref.at(r, c) > 0.0) {
        s.raster.set(r, c, 0.5);
      }
    }
  }
  s.v_poi = PositionVector(subject, reference, image_width, image_height);
  s.v_cls = ClassVector(subject.label, reference.label);
  return s;
}

RelNetActivations Forward(const RelNetParams& params, const PairSample& sample) {
  Trace t;
  RunForward(params, sample, t);
  const RelNetConfig& c = params.config;
  RelNetActivations a;
  a.m_ctr1_shape = {c.pool1_size(), c.pool1_size(), c.conv1_filters};
  a.m_ctr2_shape = {c.pool2_size(), c.pool2_size(), c.conv2_filters};
  a.m_ctr1 = std::move(t.pool1);
  a.m_ctr2 = std::move(t.pool2);
  a.v1 = std::move(t.v1);
  a.v2 = std::move(t.v2);
  a.logits = t.logits;
  a.y = t.y;
  return a;
}

LossAndGrad ComputeLossAndGrad(const RelNetParams& params, std::span<const PairSample> batch) {
  if (batch.empty()) ThrowData("loss over an empty batch");
  LossAndGrad out{0.0, RelNetParams::Zeros(params.config)};
  const double scale = 1.0 / static_cast<double>(batch.size());
  Trace t;
  for (const PairSample& s : batch) {
    RunForward(params, s, t);
    out.loss += scale * CrossEntropy(t, s.label);
    RunBackward(params, t, s.label, scale, out.grads);
  }
  return out;
}

double ComputeLoss(const RelNetParams& params, std::span<const PairSample> batch) {
  if (batch.empty()) ThrowData("loss over an empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  Trace t;
  for (const PairSample& s : batch) {
    RunForward(params, s, t);
    loss += scale * CrossEntropy(t, s.label);
  }
  return loss;
}

RelationLabel ArgmaxRelation(const std::array<double, kNumRelations>& probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumRelations; ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return static_cast<RelationLabel>(best);
}

Prediction Predict(const RelNetParams& params, const PairSample& sample) {
  Trace t;
  RunForward(params, sample, t);
  return {ArgmaxRelation(t.y), t.y};
}

void TrainConfig::Validate() const {
  if (!(lr_initial >= 0.0) || !(lr_final >= 0.0)) ThrowUsage("learning rate must be >= 0");
  if (epochs == 0) ThrowUsage("epochs must be >= 1");
  if (batch_size == 0) ThrowUsage("batch size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) ThrowUsage("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0 && weight_decay < 1.0)) ThrowUsage("weight decay must be in [0, 1)");
}

TrainResult Train(RelNetParams params, std::span<const PairSample> dataset,
                  const TrainConfig& cfg) {
  cfg.Validate();
  if (dataset.empty()) ThrowData("training set is empty");
  {
    std::array<bool, kNumRelations> seen{};
    for (const PairSample& s : dataset) seen[static_cast<std::size_t>(s.label)] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2) {
      ThrowData("training labels must cover at least two relation classes");
    }
  }

  RelNetParams velocity = RelNetParams::Zeros(params.config);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  const std::size_t steps_per_epoch = (dataset.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = steps_per_epoch * cfg.epochs;
  std::size_t step = 0;

  TrainResult result;
  std::vector<PairSample> batch;
  Trace t;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      RelNetParams grads = RelNetParams::Zeros(params.config);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const PairSample& s = dataset[order[i]];
        RunForward(params, s, t);
        batch_loss += scale * CrossEntropy(t, s.label);
        if (ArgmaxRelation(t.y) == s.label) ++correct;
        RunBackward(params, t, s.label, scale, grads);
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", step " << step
            << " (learning rate " << cfg.lr_initial << " is likely too high)";
        ThrowNumeric(msg.str());
      }
      epoch_loss += batch_loss * static_cast<double>(end - start);

      double lr = cfg.lr_initial;
      if (cfg.lr_policy == LrPolicy::kLinear && total_steps > 1) {
        const double frac = static_cast<double>(step) / static_cast<double>(total_steps - 1);
        lr = cfg.lr_initial + (cfg.lr_final - cfg.lr_initial) * frac;
      }
      const double keep = 1.0 - cfg.weight_decay;
      std::vector<Tensor*> vel;
      velocity.ForEach([&vel](std::string_view, Tensor& v, bool) { vel.push_back(&v); });
      std::vector<const Tensor*> grd;
      grads.ForEach([&grd](std::string_view, const Tensor& gt, bool) { grd.push_back(&gt); });
      std::size_t ti = 0;
      params.ForEach([&](std::string_view, Tensor& w, bool is_bias) {
        Tensor& v = *vel[ti];
        const Tensor& gt = *grd[ti];
        ++ti;
        for (std::size_t i = 0; i < w.size(); ++i) {
          v.data[i] = cfg.momentum * v.data[i] + gt.data[i];
          if (!is_bias) w.data[i] *= keep;
          w.data[i] -= lr * v.data[i];
        }
      });
      ++step;
    }
    const double n = static_cast<double>(dataset.size());
    result.history.push_back({epoch, epoch_loss / n, static_cast<double>(correct) / n});
  }
  result.params = std::move(params);
  return result;
}

std::string LossHistoryCsv(const std::vector<EpochStats>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,loss,train_acc\n";
  for (const EpochStats& e : history) out << e.epoch << ',' << e.loss << ',' << e.train_accuracy << '\n';
  return out.str();
}

}  // namespace oilsense::relnet
