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
#ifndef OILSENSE_SCENE_HPP_
#define OILSENSE_SCENE_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oilsense {

// Object categories produced by the segmentation stage. The enumeration is
// closed: unknown names are rejected rather than mapped to kOther.
enum class ClassLabel { kSuspectedArea = 0, kGround = 1, kOilStorageDevice = 2, kOther = 3 };

inline constexpr std::size_t kNumClassLabels = 4;

std::string_view ClassLabelName(ClassLabel label);
// Throws Error(kData) for unknown names.
ClassLabel ParseClassLabel(std::string_view name);

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Axis-aligned box in pixel coordinates, y growing downward.
class BBox {
 public:
  // Throws Error(kData) unless x1 < x2 and y1 < y2.
  BBox(double x1, double y1, double x2, double y2);

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }
  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x1_ + x2_); }
  double center_y() const { return 0.5 * (y1_ + y2_); }

  // Smallest box containing both.
  static BBox Union(const BBox& a, const BBox& b);
  // Grows every side by `fraction` of the corresponding extent.
  BBox Expanded(double fraction) const;

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x1_, y1_, x2_, y2_;
};

// Polygon outline, at least three vertices, no consecutive duplicates.
class PolygonMask {
 public:
  explicit PolygonMask(std::vector<Point> vertices);

  const std::vector<Point>& vertices() const { return vertices_; }
  // Tight bounding box of the vertices.
  BBox Bounds() const;
  // Even-odd point-in-polygon test.
  bool Contains(double x, double y) const;

  friend bool operator==(const PolygonMask&, const PolygonMask&) = default;

 private:
  std::vector<Point> vertices_;
};

// Row-major grid of values in [0, 1].
class MaskRaster {
 public:
  MaskRaster(std::size_t width, std::size_t height);
  MaskRaster(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::span<const double> values() const { return values_; }
  double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  void set(std::size_t row, std::size_t col, double v);
  double FilledFraction() const;

  friend bool operator==(const MaskRaster&, const MaskRaster&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> values_;
};

struct DetectedObject {
  int id = 0;
  ClassLabel label = ClassLabel::kOther;
  double confidence = 0.0;
  BBox bbox{0, 0, 1, 1};
  PolygonMask polygon{{{0, 0}, {1, 0}, {0, 1}}};
  // Per-object ground truth ("is this an oil area"), only present in
  // generated or hand-labelled corpora.
  std::optional<bool> leak;

  friend bool operator==(const DetectedObject&, const DetectedObject&) = default;
};

struct Scene {
  std::optional<std::string> image_path;
  int width = 1;
  int height = 1;
  std::vector<DetectedObject> objects;
  std::optional<bool> leak_label;

  friend bool operator==(const Scene&, const Scene&) = default;
};

// Checks every Scene invariant; throws Error(kData) naming the offending
// field path.
void ValidateScene(const Scene& scene);

Scene ParseSceneJson(std::string_view text);
std::string SerializeSceneJson(const Scene& scene);

Scene LoadSceneFile(const std::string& path);
void SaveSceneFile(const Scene& scene, const std::string& path);

// Cell value 1 iff the cell center, mapped through `frame`, lies inside the
// polygon.
MaskRaster Rasterize(const PolygonMask& polygon, const BBox& frame, std::size_t out_w,
                     std::size_t out_h);

double BboxIou(const BBox& a, const BBox& b);

inline constexpr std::size_t kPositionVectorSize = 8;
inline constexpr std::size_t kClassVectorSize = 2 * kNumClassLabels;

// [subject cx, cy, reference cx, cy] normalized by image size, then
// log(w_s / w_r), log(h_s / h_r), then (cx_s - cx_r) / W, (cy_s - cy_r) / H.
std::array<double, kPositionVectorSize> PositionVector(const DetectedObject& subject,
                                                       const DetectedObject& reference,
                                                       double image_width, double image_height);

// Two concatenated one-hot blocks (subject, reference).
std::array<double, kClassVectorSize> ClassVector(ClassLabel subject, ClassLabel reference);

}  // namespace oilsense

#endif  // OILSENSE_SCENE_HPP_
