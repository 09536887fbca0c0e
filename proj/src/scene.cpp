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
#include "oilsense/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oilsense/error.hpp"

namespace oilsense {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kNumClassLabels> kClassNames = {
    "suspected_area", "ground", "oil_storage_device", "other"};

// Polygon vertices may sit this far outside the image.
constexpr double kBoundsTolerancePx = 1.0;

std::string Path(std::string_view prefix, std::string_view field) {
  std::string out(prefix);
  out += '.';
  out += field;
  return out;
}

const json& Require(const json& obj, std::string_view key, std::string_view path) {
  auto it = obj.find(key);
  if (it == obj.end()) ThrowData(Path(path, key) + ": missing field");
  return *it;
}

double RequireNumber(const json& v, const std::string& path) {
  if (!v.is_number()) ThrowData(path + ": expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) ThrowData(path + ": not finite");
  return d;
}

int RequireInt(const json& v, const std::string& path) {
  if (!v.is_number_integer()) ThrowData(path + ": expected an integer");
  return v.get<int>();
}

std::optional<bool> OptionalBool(const json& obj, std::string_view key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) ThrowData(Path(path, key) + ": expected true, false or null");
  return it->get<bool>();
}

}  // namespace

std::string_view ClassLabelName(ClassLabel label) {
  return kClassNames[static_cast<std::size_t>(label)];
}

ClassLabel ParseClassLabel(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<ClassLabel>(i);
  }
  ThrowData("unknown class \"" + std::string(name) + "\"");
}

BBox::BBox(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2))) {
    ThrowData("degenerate bbox: non-finite coordinate");
  }
  if (!(x1 < x2) || !(y1 < y2)) ThrowData("degenerate bbox: requires x1 < x2 and y1 < y2");
}

BBox BBox::Union(const BBox& a, const BBox& b) {
  return BBox(std::min(a.x1_, b.x1_), std::min(a.y1_, b.y1_), std::max(a.x2_, b.x2_),
              std::max(a.y2_, b.y2_));
}

BBox BBox::Expanded(double fraction) const {
  const double dx = fraction * width();
  const double dy = fraction * height();
  return BBox(x1_ - dx, y1_ - dy, x2_ + dx, y2_ + dy);
}

PolygonMask::PolygonMask(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) ThrowData("polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Point& p = vertices_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) ThrowData("polygon vertex not finite");
    if (p == vertices_[(i + 1) % vertices_.size()]) {
      ThrowData("polygon has consecutive identical vertices at index " + std::to_string(i));
    }
  }
}

BBox PolygonMask::Bounds() const {
  double x1 = vertices_[0].x, x2 = x1, y1 = vertices_[0].y, y2 = y1;
  for (const Point& p : vertices_) {
    x1 = std::min(x1, p.x);
    x2 = std::max(x2, p.x);
    y1 = std::min(y1, p.y);
    y2 = std::max(y2, p.y);
  }
  return BBox(x1, y1, x2, y2);
}

bool PolygonMask::Contains(double x, double y) const {
  bool inside = false;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = vertices_[i];
    const Point& b = vertices_[j];
    if ((a.y > y) != (b.y > y)) {
      const double x_cross = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < x_cross) inside = !inside;
    }
  }
  return inside;
}

MaskRaster::MaskRaster(std::size_t width, std::size_t height)
    : width_(width), height_(height), values_(width * height, 0.0) {
  if (width == 0 || height == 0) ThrowData("raster dimensions must be positive");
}

MaskRaster::MaskRaster(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width == 0 || height == 0) ThrowData("raster dimensions must be positive");
  if (values_.size() != width * height) ThrowData("raster size does not match width*height");
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) ThrowData("raster value outside [0, 1]");
  }
}

void MaskRaster::set(std::size_t row, std::size_t col, double v) {
  if (!(v >= 0.0 && v <= 1.0)) ThrowData("raster value outside [0, 1]");
  values_[row * width_ + col] = v;
}

double MaskRaster::FilledFraction() const {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum / static_cast<double>(values_.size());
}

void ValidateScene(const Scene& scene) {
  if (scene.width <= 0 || scene.height <= 0) ThrowData("scene: dimensions must be positive");
  std::set<int> ids;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const DetectedObject& obj = scene.objects[i];
    const std::string path = "objects[" + std::to_string(i) + "]";
    if (!ids.insert(obj.id).second) ThrowData(path + ".id: duplicate id " + std::to_string(obj.id));
    if (!(obj.confidence >= 0.0 && obj.confidence <= 1.0)) {
      ThrowData(path + ".score: confidence out of range");
    }
    for (std::size_t k = 0; k < obj.polygon.vertices().size(); ++k) {
      const Point& p = obj.polygon.vertices()[k];
      if (p.x < -kBoundsTolerancePx || p.x > scene.width + kBoundsTolerancePx ||
          p.y < -kBoundsTolerancePx || p.y > scene.height + kBoundsTolerancePx) {
        ThrowData(path + ".polygon[" + std::to_string(k) + "]: vertex outside image bounds");
      }
    }
  }
}

Scene ParseSceneJson(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    ThrowData(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) ThrowData("scene: expected a JSON object");

  Scene scene;
  if (auto it = doc.find("image"); it != doc.end() && !it->is_null()) {
    if (!it->is_string()) ThrowData("scene.image: expected a string or null");
    scene.image_path = it->get<std::string>();
  }
  scene.width = RequireInt(Require(doc, "width", "scene"), "scene.width");
  scene.height = RequireInt(Require(doc, "height", "scene"), "scene.height");
  scene.leak_label = OptionalBool(doc, "leak_label", "scene");

  const json& objects = Require(doc, "objects", "scene");
  if (!objects.is_array()) ThrowData("scene.objects: expected an array");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const json& o = objects[i];
    const std::string path = "objects[" + std::to_string(i) + "]";
    if (!o.is_object()) ThrowData(path + ": expected an object");
    DetectedObject obj;
    obj.id = RequireInt(Require(o, "id", path), Path(path, "id"));
    const json& cls = Require(o, "class", path);
    if (!cls.is_string()) ThrowData(Path(path, "class") + ": expected a string");
    try {
      obj.label = ParseClassLabel(cls.get<std::string>());
    } catch (const Error& e) {
      ThrowData(Path(path, "class") + ": " + e.what());
    }
    obj.confidence = RequireNumber(Require(o, "score", path), Path(path, "score"));
    if (obj.confidence < 0.0 || obj.confidence > 1.0) {
      ThrowData(Path(path, "score") + ": confidence out of range");
    }
    const json& box = Require(o, "bbox", path);
    if (!box.is_array() || box.size() != 4) ThrowData(Path(path, "bbox") + ": expected [x1,y1,x2,y2]");
    std::array<double, 4> c{};
    for (std::size_t k = 0; k < 4; ++k) {
      c[k] = RequireNumber(box[k], Path(path, "bbox") + "[" + std::to_string(k) + "]");
    }
    try {
      obj.bbox = BBox(c[0], c[1], c[2], c[3]);
    } catch (const Error& e) {
      ThrowData(Path(path, "bbox") + ": " + e.what());
    }
    const json& poly = Require(o, "polygon", path);
    if (!poly.is_array()) ThrowData(Path(path, "polygon") + ": expected an array of [x,y]");
    std::vector<Point> pts;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const std::string vpath = Path(path, "polygon") + "[" + std::to_string(k) + "]";
      if (!poly[k].is_array() || poly[k].size() != 2) ThrowData(vpath + ": expected [x,y]");
      pts.push_back({RequireNumber(poly[k][0], vpath), RequireNumber(poly[k][1], vpath)});
    }
    try {
      obj.polygon = PolygonMask(std::move(pts));
    } catch (const Error& e) {
      ThrowData(Path(path, "polygon") + ": " + e.what());
    }
    obj.leak = OptionalBool(o, "leak", path);
    scene.objects.push_back(std::move(obj));
  }
  ValidateScene(scene);
  return scene;
}

std::string SerializeSceneJson(const Scene& scene) {
  json doc;
  doc["image"] = scene.image_path ? json(*scene.image_path) : json(nullptr);
  doc["width"] = scene.width;
  doc["height"] = scene.height;
  doc["leak_label"] = scene.leak_label ? json(*scene.leak_label) : json(nullptr);
  json objects = json::array();
  for (const DetectedObject& obj : scene.objects) {
    json o;
    o["id"] = obj.id;
    o["class"] = ClassLabelName(obj.label);
    o["score"] = obj.confidence;
    o["bbox"] = {obj.bbox.x1(), obj.bbox.y1(), obj.bbox.x2(), obj.bbox.y2()};
    json poly = json::array();
    for (const Point& p : obj.polygon.vertices()) poly.push_back({p.x, p.y});
    o["polygon"] = std::move(poly);
    if (obj.leak) o["leak"] = *obj.leak;
    objects.push_back(std::move(o));
  }
  doc["objects"] = std::move(objects);
  return doc.dump(1);
}

Scene LoadSceneFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("cannot open scene file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return ParseSceneJson(buf.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void SaveSceneFile(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ThrowUsage("cannot write scene file " + path);
  out << SerializeSceneJson(scene) << '\n';
}

MaskRaster Rasterize(const PolygonMask& polygon, const BBox& frame, std::size_t out_w,
                     std::size_t out_h) {
  MaskRaster raster(out_w, out_h);
  const double cell_w = frame.width() / static_cast<double>(out_w);
  const double cell_h = frame.height() / static_cast<double>(out_h);
  for (std::size_t r = 0; r < out_h; ++r) {
    const double y = frame.y1() + (static_cast<double>(r) + 0.5) * cell_h;
    for (std::size_t c = 0; c < out_w; ++c) {
      const double x = frame.x1() + (static_cast<double>(c) + 0.5) * cell_w;
      if (polygon.Contains(x, y)) raster.set(r, c, 1.0);
    }
  }
  return raster;
}

double BboxIou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::array<double, kPositionVectorSize> PositionVector(const DetectedObject& subject,
                                                       const DetectedObject& reference,
                                                       double image_width, double image_height) {
  if (!(image_width > 0.0) || !(image_height > 0.0)) ThrowData("image dimensions must be positive");
  const BBox& s = subject.bbox;
  const BBox& r = reference.bbox;
  if (!(s.area() > 0.0) || !(r.area() > 0.0)) ThrowData("zero-size bbox in position vector");
  return {s.center_x() / image_width,
          s.center_y() / image_height,
          r.center_x() / image_width,
          r.center_y() / image_height,
          std::log(s.width() / r.width()),
          std::log(s.height() / r.height()),
          (s.center_x() - r.center_x()) / image_width,
          (s.center_y() - r.center_y()) / image_height};
}

std::array<double, kClassVectorSize> ClassVector(ClassLabel subject, ClassLabel reference) {
  std::array<double, kClassVectorSize> v{};
  v[static_cast<std::size_t>(subject)] = 1.0;
  v[kNumClassLabels + static_cast<std::size_t>(reference)] = 1.0;
  return v;
}

}  // namespace oilsense
