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
#ifndef OILSENSE_RELNET_HPP_
#define OILSENSE_RELNET_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oilsense/scene.hpp"

namespace oilsense::relnet {

enum class RelationLabel { kAbove = 0, kNearby = 1, kOther = 2 };
inline constexpr std::size_t kNumRelations = 3;

std::string_view RelationName(RelationLabel label);
RelationLabel ParseRelationName(std::string_view name);

// Which input branches reach the network. Excluded branches are fed zeros
// both in training and at inference.
enum class InputVariant { kPosition, kPositionType, kFull };

std::string_view VariantName(InputVariant v);
InputVariant ParseVariantName(std::string_view name);

// Layer geometry:
//   grid x grid x 1 -> conv 3x3 same (conv1_filters) -> ReLU -> maxpool 2x2
//   -> conv 3x3 stride 2 valid (conv2_filters) -> ReLU -> maxpool 2x2
//   (position, class) -> fc1 -> ReLU
//   (fc1 output, flattened conv features) -> fc2 -> ReLU -> head (3) -> softmax
struct RelNetConfig {
  std::size_t grid = 28;
  std::size_t conv1_filters = 256;
  std::size_t conv2_filters = 256;
  std::size_t fc1_width = 1024;
  std::size_t fc2_width = 256;
  InputVariant variant = InputVariant::kFull;

  std::size_t pool1_size() const { return grid / 2; }
  std::size_t conv2_size() const { return (pool1_size() - 3) / 2 + 1; }
  std::size_t pool2_size() const { return conv2_size() / 2; }
  std::size_t vector_inputs() const { return kPositionVectorSize + kClassVectorSize; }
  std::size_t contour_features() const { return conv2_filters * pool2_size() * pool2_size(); }

  // Throws Error(kUsage) for geometry that does not chain.
  void Validate() const;

  friend bool operator==(const RelNetConfig&, const RelNetConfig&) = default;
};

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);
  std::size_t size() const { return data.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Learnable tensors; also used as the gradient container.
struct RelNetParams {
  RelNetConfig config;
  Tensor conv1_w, conv1_b;  // [F1, 1, 3, 3], [F1]
  Tensor conv2_w, conv2_b;  // [F2, F1, 3, 3], [F2]
  Tensor fc1_w, fc1_b;      // [fc1, 16], [fc1]
  Tensor fc2_w, fc2_b;      // [fc2, fc1 + contour], [fc2]
  Tensor head_w, head_b;    // [3, fc2], [3]

  // Zero-valued tensors shaped for `config`.
  static RelNetParams Zeros(const RelNetConfig& config);

  // Visits tensors in a fixed order; `is_bias` marks bias vectors.
  void ForEach(const std::function<void(std::string_view name, Tensor& t, bool is_bias)>& fn);
  void ForEach(
      const std::function<void(std::string_view name, const Tensor& t, bool is_bias)>& fn) const;
  std::size_t ParameterCount() const;

  friend bool operator==(const RelNetParams&, const RelNetParams&) = default;
};

// He-style fan-in init for weights, zero biases. Deterministic per seed.
RelNetParams InitParams(const RelNetConfig& config, std::uint64_t seed);

struct PairSample {
  MaskRaster raster{28, 28};
  std::array<double, kPositionVectorSize> v_poi{};
  std::array<double, kClassVectorSize> v_cls{};
  RelationLabel label = RelationLabel::kOther;
};

// Joint rendering of an ordered pair in the union-bbox frame (10% margin):
// subject cells 1.0, reference cells 0.5, overlap 1.0.
PairSample MakePairSample(const DetectedObject& subject, const DetectedObject& reference,
                          double image_width, double image_height, std::size_t grid = 28);

struct Shape3 {
  std::size_t height, width, channels;
  friend bool operator==(const Shape3&, const Shape3&) = default;
};

struct RelNetActivations {
  Shape3 m_ctr1_shape{};  // after conv1 + pool
  Shape3 m_ctr2_shape{};  // after conv2 + pool
  std::vector<double> m_ctr1;  // channel-major [c][h][w]
  std::vector<double> m_ctr2;
  std::vector<double> v1;
  std::vector<double> v2;
  std::array<double, kNumRelations> logits{};
  std::array<double, kNumRelations> y{};
};

RelNetActivations Forward(const RelNetParams& params, const PairSample& sample);

struct LossAndGrad {
  double loss = 0.0;
  RelNetParams grads;
};

// Mean cross-entropy over the batch and its exact gradient.
LossAndGrad ComputeLossAndGrad(const RelNetParams& params, std::span<const PairSample> batch);
// Loss only; same value as ComputeLossAndGrad(...).loss.
double ComputeLoss(const RelNetParams& params, std::span<const PairSample> batch);

struct Prediction {
  RelationLabel label;
  std::array<double, kNumRelations> probabilities;
};

// Argmax, ties to the earlier label (Above < Nearby < Other).
RelationLabel ArgmaxRelation(const std::array<double, kNumRelations>& probs);
Prediction Predict(const RelNetParams& params, const PairSample& sample);

enum class LrPolicy { kConstant, kLinear };

struct TrainConfig {
  double lr_initial = 0.01;
  double lr_final = 0.001;
  LrPolicy lr_policy = LrPolicy::kLinear;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;

  void Validate() const;
};

struct EpochStats {
  std::size_t epoch;
  double loss;
  double train_accuracy;
};

struct TrainResult {
  RelNetParams params;
  std::vector<EpochStats> history;
};

// Minibatch SGD with momentum. Weight decay shrinks weight tensors (not
// biases) by (1 - weight_decay) every step independently of the learning
// rate. Throws Error(kNumeric) on a non-finite loss.
TrainResult Train(RelNetParams params, std::span<const PairSample> dataset, const TrainConfig& cfg);

std::string LossHistoryCsv(const std::vector<EpochStats>& history);

// Versioned JSON weight file.
inline constexpr int kWeightFileVersion = 1;
std::string SerializeParams(const RelNetParams& params);
RelNetParams ParseParams(std::string_view text);
// Additionally requires every tensor to match `expected`.
RelNetParams ParseParams(std::string_view text, const RelNetConfig& expected);
void SaveParams(const RelNetParams& params, const std::string& path);
RelNetParams LoadParams(const std::string& path);

}  // namespace oilsense::relnet

#endif  // OILSENSE_RELNET_HPP_
