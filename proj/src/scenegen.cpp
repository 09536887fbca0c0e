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
#include "oilsense/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oilsense/error.hpp"

namespace oilsense::scenegen {
namespace {

using nlohmann::json;
using Rng = std::mt19937_64;

constexpr int kPlacementAttempts = 200;
constexpr std::size_t kPairsPerLabelPerScene = 2;

double Uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int UniformInt(Rng& rng, IntRange r) { return std::uniform_int_distribution<int>(r.min, r.max)(rng); }

Rng SceneRng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x6f696c73u};
  return Rng(seq);
}

double SampleConfidence(Rng& rng, double jitter) {
  if (jitter <= 0.0) return 1.0;
  const double n = std::normal_distribution<double>(0.0, jitter)(rng);
  return std::clamp(1.0 - std::abs(n), 0.5, 1.0);
}

bool InsideCanvas(const std::vector<Point>& pts, double w, double h) {
  return std::all_of(pts.begin(), pts.end(),
                     [w, h](const Point& p) { return p.x >= 0 && p.x <= w && p.y >= 0 && p.y <= h; });
}

// Star-convex outline around the origin.
std::vector<Point> StarBlob(Rng& rng, int vertices, double rx, double ry) {
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(vertices));
  const double step = 2.0 * std::numbers::pi / vertices;
  const double phase = Uniform(rng, 0.0, step);
  for (int i = 0; i < vertices; ++i) {
    const double a = phase + i * step + Uniform(rng, -0.3, 0.3) * step;
    const double scale = 1.0 + Uniform(rng, -0.4, 0.4);
    pts.push_back({rx * scale * std::cos(a), ry * scale * std::sin(a)});
  }
  return pts;
}

std::vector<Point> Translated(const std::vector<Point>& pts, double dx, double dy) {
  std::vector<Point> out = pts;
  for (Point& p : out) {
    p.x += dx;
    p.y += dy;
  }
  return out;
}

DetectedObject MakeObject(int id, ClassLabel label, double confidence, std::vector<Point> pts) {
  DetectedObject obj;
  obj.id = id;
  obj.label = label;
  obj.confidence = confidence;
  obj.polygon = PolygonMask(std::move(pts));
  obj.bbox = obj.polygon.Bounds();
  return obj;
}

class SceneBuilder {
 public:
  SceneBuilder(const GenConfig& cfg, std::uint64_t index)
      : cfg_(cfg), rng_(SceneRng(cfg.seed, index)), w_(cfg.width), h_(cfg.height) {}

  GeneratedScene Build() {
    out_.scene.width = cfg_.width;
    out_.scene.height = cfg_.height;
    AddGrounds();
    AddTanks();
    const int blobs = UniformInt(rng_, cfg_.blob_count);
    for (int i = 0; i < blobs; ++i) AddBlob();
    if (Uniform(rng_, 0.0, 1.0) < cfg_.distractor_probability) AddDistractor();
    const int others = UniformInt(rng_, cfg_.other_count);
    for (int i = 0; i < others; ++i) AddOther();
    Label();
    return std::move(out_);
  }

 private:
  int NextId() const { return static_cast<int>(out_.scene.objects.size()); }

  double Conf() { return SampleConfidence(rng_, cfg_.confidence_jitter); }

  void AddGrounds() {
    const int n = UniformInt(rng_, cfg_.ground_count);
    for (int i = 0; i < n; ++i) {
      const double top = h_ * (1.0 - Uniform(rng_, cfg_.ground_fraction.min, cfg_.ground_fraction.max));
      const double x1 = w_ * i / n;
      const double x2 = w_ * (i + 1) / n;
      out_.scene.objects.push_back(
          MakeObject(NextId(), ClassLabel::kGround, Conf(), {{x1, top}, {x2, top}, {x2, h_}, {x1, h_}}));
      grounds_.push_back(out_.scene.objects.size() - 1);
    }
  }

  double GroundTopAt(double x) const {
    for (std::size_t g : grounds_) {
      const BBox& b = out_.scene.objects[g].bbox;
      if (x >= b.x1() && x <= b.x2()) return b.y1();
    }
    return h_;
  }

  void AddTanks() {
    const int n = UniformInt(rng_, cfg_.tank_count);
    for (int i = 0; i < n; ++i) {
      for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        const double tw = w_ * Uniform(rng_, 0.08, 0.16);
        const double th = h_ * Uniform(rng_, 0.15, 0.3);
        const double x1 = Uniform(rng_, 0.0, w_ - tw);
        const double x2 = x1 + tw;
        const double y2 = std::min(h_, GroundTopAt(0.5 * (x1 + x2)) + h_ * Uniform(rng_, 0.02, 0.08));
        const double y1 = y2 - th;
        if (y1 < 0) continue;
        bool clash = false;
        for (std::size_t t : tanks_) {
          const BBox& b = out_.scene.objects[t].bbox;
          if (x1 < b.x2() + 0.02 * w_ && b.x1() < x2 + 0.02 * w_) clash = true;
        }
        if (clash) continue;
        const double dome = 0.15 * th;
        out_.scene.objects.push_back(MakeObject(NextId(), ClassLabel::kOilStorageDevice, Conf(),
                                                {{x1, y2},
                                                 {x1, y1 + dome},
                                                 {x1 + 0.25 * tw, y1},
                                                 {x2 - 0.25 * tw, y1},
                                                 {x2, y1 + dome},
                                                 {x2, y2}}));
        tanks_.push_back(out_.scene.objects.size() - 1);
        break;
      }
    }
  }

  std::vector<Point> RandomBlobShape() {
    const int n = UniformInt(rng_, cfg_.blob_vertices);
    const double rx = w_ * Uniform(rng_, 0.04, 0.10);
    const double ry = rx * Uniform(rng_, 0.4, 0.9);
    return StarBlob(rng_, n, rx, ry);
  }

  RelationLabel Oracle(const DetectedObject& s, const DetectedObject& r) const {
    return LabelRelationOracle(s, r, w_, h_);
  }

  // Tries placements produced by `propose` until `accept` holds.
  template <typename Propose, typename Accept>
  std::optional<DetectedObject> Place(ClassLabel label, Propose propose, Accept accept) {
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      const std::vector<Point> shape = RandomBlobShape();
      const std::optional<Point> offset = propose(PolygonMask(shape).Bounds());
      if (!offset) continue;
      std::vector<Point> pts = Translated(shape, offset->x, offset->y);
      if (!InsideCanvas(pts, w_, h_)) continue;
      DetectedObject obj = MakeObject(NextId(), label, 1.0, std::move(pts));
      if (accept(obj)) {
        obj.confidence = Conf();
        return obj;
      }
    }
    return std::nullopt;
  }

  std::optional<Point> PointNear(const BBox& shape, const BBox& anchor) {
    const double diag = std::hypot(w_, h_);
    const double d = diag * Uniform(rng_, 0.06, 0.24);
    const double a = Uniform(rng_, 0.0, 2.0 * std::numbers::pi);
    const double cx = anchor.center_x() + d * std::cos(a);
    const double cy = anchor.center_y() + d * std::sin(a);
    return Point{cx - shape.center_x(), cy - shape.center_y()};
  }

  std::optional<Point> PointAnywhere(const BBox& shape) {
    const double cx = Uniform(rng_, 0.0, w_);
    const double cy = Uniform(rng_, 0.0, h_);
    return Point{cx - shape.center_x(), cy - shape.center_y()};
  }

  void AddBlob() {
    std::discrete_distribution<int> mix(cfg_.relation_mix.begin(), cfg_.relation_mix.end());
    const auto intended = static_cast<RelationLabel>(mix(rng_));
    std::vector<std::size_t> anchors;
    switch (intended) {
      case RelationLabel::kAbove:
        anchors = grounds_.empty() ? tanks_ : grounds_;
        break;
      case RelationLabel::kNearby:
        anchors = tanks_.empty() ? grounds_ : tanks_;
        break;
      case RelationLabel::kOther:
        for (std::size_t i = 0; i < out_.scene.objects.size(); ++i) {
          if (out_.scene.objects[i].label != ClassLabel::kSuspectedArea) anchors.push_back(i);
        }
        break;
    }
    if (anchors.empty()) return;
    const std::size_t anchor_idx =
        anchors[std::uniform_int_distribution<std::size_t>(0, anchors.size() - 1)(rng_)];
    const DetectedObject anchor = out_.scene.objects[anchor_idx];

    auto accept = [&](const DetectedObject& obj) { return Oracle(obj, anchor) == intended; };
    std::optional<DetectedObject> blob;
    if (intended == RelationLabel::kAbove) {
      blob = Place(ClassLabel::kSuspectedArea, [&](const BBox& shape) -> std::optional<Point> {
        const BBox& a = anchor.bbox;
        const double lo = std::max(0.0, a.x1()) - 0.2 * shape.width();
        const double hi = std::min(w_, a.x2()) - 0.8 * shape.width();
        if (hi <= lo) return std::nullopt;
        const double x1 = Uniform(rng_, lo, hi);
        const double y2 = a.y1() + h_ * Uniform(rng_, -0.04, 0.12);
        return Point{x1 - shape.x1(), y2 - shape.y2()};
      }, accept);
    } else if (intended == RelationLabel::kNearby) {
      blob = Place(ClassLabel::kSuspectedArea,
                   [&](const BBox& shape) { return PointNear(shape, anchor.bbox); }, accept);
    } else {
      blob = Place(ClassLabel::kSuspectedArea,
                   [&](const BBox& shape) { return PointAnywhere(shape); }, accept);
    }
    if (!blob) return;
    out_.placements.push_back({blob->id, anchor.id, intended});
    out_.scene.objects.push_back(std::move(*blob));
  }

  bool MakesLeak(const DetectedObject& blob) const {
    for (std::size_t g : grounds_) {
      if (Oracle(blob, out_.scene.objects[g]) == RelationLabel::kAbove) return true;
    }
    for (std::size_t t : tanks_) {
      if (Oracle(blob, out_.scene.objects[t]) == RelationLabel::kNearby) return true;
    }
    return false;
  }

  void AddDistractor() {
    auto blob = Place(ClassLabel::kSuspectedArea,
                      [&](const BBox& shape) { return PointAnywhere(shape); },
                      [&](const DetectedObject& obj) { return !MakesLeak(obj); });
    if (blob) out_.scene.objects.push_back(std::move(*blob));
  }

  void AddOther() {
    const double ow = w_ * Uniform(rng_, 0.02, 0.06);
    const double oh = h_ * Uniform(rng_, 0.08, 0.3);
    const double x1 = Uniform(rng_, 0.0, w_ - ow);
    const double y1 = Uniform(rng_, 0.0, h_ - oh);
    out_.scene.objects.push_back(MakeObject(NextId(), ClassLabel::kOther, Conf(),
                                            {{x1, y1}, {x1 + ow, y1}, {x1 + ow, y1 + oh}, {x1, y1 + oh}}));
  }

  void Label() {
    bool leak = false;
    for (DetectedObject& obj : out_.scene.objects) {
      obj.leak = obj.label == ClassLabel::kSuspectedArea && MakesLeak(obj);
      leak = leak || *obj.leak;
    }
    out_.scene.leak_label = leak;
  }

  const GenConfig& cfg_;
  Rng rng_;
  double w_, h_;
  GeneratedScene out_;
  std::vector<std::size_t> grounds_;
  std::vector<std::size_t> tanks_;
};

void CheckRange(IntRange r, int floor, const char* name) {
  if (r.min < floor || r.max < r.min) {
    ThrowUsage(std::string("gen config: ") + name + " range is invalid");
  }
}

IntRange ParseIntRange(const json& j, const char* name, IntRange dflt) {
  auto it = j.find(name);
  if (it == j.end()) return dflt;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() || !(*it)[1].is_number_integer()) {
    ThrowUsage(std::string("gen config: ") + name + " must be [min, max] integers");
  }
  return {(*it)[0].get<int>(), (*it)[1].get<int>()};
}

RealRange ParseRealRange(const json& j, const char* name, RealRange dflt) {
  auto it = j.find(name);
  if (it == j.end()) return dflt;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    ThrowUsage(std::string("gen config: ") + name + " must be [min, max] numbers");
  }
  return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

char RasterCode(double v) { return v >= 1.0 ? '2' : (v > 0.0 ? '1' : '0'); }

}  // namespace

void GenConfig::Validate() const {
  if (width <= 0 || height <= 0) ThrowUsage("gen config: canvas must be positive");
  CheckRange(ground_count, 0, "ground_count");
  CheckRange(tank_count, 0, "tank_count");
  CheckRange(blob_count, 0, "blob_count");
  CheckRange(other_count, 0, "other_count");
  CheckRange(blob_vertices, 3, "blob_vertices");
  if (!(ground_fraction.min > 0.0 && ground_fraction.max <= 0.9 &&
        ground_fraction.min <= ground_fraction.max)) {
    ThrowUsage("gen config: ground_fraction must lie in (0, 0.9]");
  }
  if (!(distractor_probability >= 0.0 && distractor_probability <= 1.0)) {
    ThrowUsage("gen config: distractor_probability must be in [0, 1]");
  }
  double sum = 0.0;
  for (double f : relation_mix) {
    if (!(f >= 0.0)) ThrowUsage("gen config: relation_mix entries must be >= 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) ThrowUsage("gen config: relation_mix must sum to 1");
  if (!(confidence_jitter >= 0.0)) ThrowUsage("gen config: confidence_jitter must be >= 0");
}

GenConfig ParseGenConfigJson(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    ThrowUsage(std::string("gen config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) ThrowUsage("gen config: expected an object");
  GenConfig c;
  try {
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.distractor_probability = j.value("distractor_probability", c.distractor_probability);
    c.confidence_jitter = j.value("confidence_jitter", c.confidence_jitter);
    c.seed = j.value("seed", c.seed);
    if (auto it = j.find("relation_mix"); it != j.end()) {
      const auto mix = it->get<std::vector<double>>();
      if (mix.size() != relnet::kNumRelations) ThrowUsage("gen config: relation_mix needs 3 entries");
      std::copy(mix.begin(), mix.end(), c.relation_mix.begin());
    }
  } catch (const json::exception& e) {
    ThrowUsage(std::string("gen config: ") + e.what());
  }
  c.ground_count = ParseIntRange(j, "ground_count", c.ground_count);
  c.tank_count = ParseIntRange(j, "tank_count", c.tank_count);
  c.blob_count = ParseIntRange(j, "blob_count", c.blob_count);
  c.other_count = ParseIntRange(j, "other_count", c.other_count);
  c.blob_vertices = ParseIntRange(j, "blob_vertices", c.blob_vertices);
  c.ground_fraction = ParseRealRange(j, "ground_fraction", c.ground_fraction);
  c.Validate();
  return c;
}

std::string GenConfigToJson(const GenConfig& c) {
  json j;
  j["width"] = c.width;
  j["height"] = c.height;
  j["ground_count"] = {c.ground_count.min, c.ground_count.max};
  j["tank_count"] = {c.tank_count.min, c.tank_count.max};
  j["blob_count"] = {c.blob_count.min, c.blob_count.max};
  j["other_count"] = {c.other_count.min, c.other_count.max};
  j["blob_vertices"] = {c.blob_vertices.min, c.blob_vertices.max};
  j["ground_fraction"] = {c.ground_fraction.min, c.ground_fraction.max};
  j["distractor_probability"] = c.distractor_probability;
  j["relation_mix"] = c.relation_mix;
  j["confidence_jitter"] = c.confidence_jitter;
  j["seed"] = c.seed;
  return j.dump(2);
}

RelationLabel LabelRelationOracle(const DetectedObject& subject, const DetectedObject& reference,
                                  double image_width, double image_height) {
  const BBox& s = subject.bbox;
  const BBox& r = reference.bbox;
  const double overlap = std::min(s.x2(), r.x2()) - std::max(s.x1(), r.x1());
  const double narrower = std::min(s.width(), r.width());
  const double gap = s.y2() - r.y1();
  if (overlap >= 0.25 * narrower && gap >= -0.05 * image_height && gap <= 0.15 * image_height &&
      s.center_y() < r.center_y()) {
    return RelationLabel::kAbove;
  }
  const double dist = std::hypot(s.center_x() - r.center_x(), s.center_y() - r.center_y());
  if (dist <= 0.25 * std::hypot(image_width, image_height)) return RelationLabel::kNearby;
  return RelationLabel::kOther;
}

GeneratedScene GenSceneWithTrace(const GenConfig& cfg, std::uint64_t index) {
  cfg.Validate();
  GeneratedScene g = SceneBuilder(cfg, index).Build();
  ValidateScene(g.scene);
  return g;
}

Scene GenScene(const GenConfig& cfg, std::uint64_t index) { return GenSceneWithTrace(cfg, index).scene; }

std::vector<LabeledPair> GenPairDataset(const GenConfig& cfg, std::size_t n_pairs, std::size_t grid) {
  cfg.Validate();
  if (n_pairs == 0) ThrowUsage("pair dataset size must be >= 1");

  // Largest-remainder quotas.
  std::array<std::size_t, relnet::kNumRelations> quota{};
  std::array<double, relnet::kNumRelations> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < relnet::kNumRelations; ++k) {
    const double exact = cfg.relation_mix[k] * static_cast<double>(n_pairs);
    quota[k] = static_cast<std::size_t>(std::floor(exact));
    remainder[k] = exact - static_cast<double>(quota[k]);
    assigned += quota[k];
  }
  while (assigned < n_pairs) {
    const auto k = static_cast<std::size_t>(
        std::max_element(remainder.begin(), remainder.end()) - remainder.begin());
    ++quota[k];
    remainder[k] = -1.0;
    ++assigned;
  }

  std::vector<LabeledPair> out;
  out.reserve(n_pairs);
  const std::uint64_t max_scenes = std::max<std::uint64_t>(2000, 20 * n_pairs);
  for (std::uint64_t index = 0; index < max_scenes && out.size() < n_pairs; ++index) {
    const Scene scene = GenScene(cfg, index);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      for (std::size_t j = 0; j < scene.objects.size(); ++j) {
        if (i != j) pairs.emplace_back(i, j);
      }
    }
    Rng rng = SceneRng(cfg.seed ^ 0x9e3779b97f4a7c15ULL, index);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::array<std::size_t, relnet::kNumRelations> taken{};
    for (const auto& [i, j] : pairs) {
      const DetectedObject& s = scene.objects[i];
      const DetectedObject& r = scene.objects[j];
      const RelationLabel label = LabelRelationOracle(s, r, scene.width, scene.height);
      const auto k = static_cast<std::size_t>(label);
      if (quota[k] == 0 || taken[k] >= kPairsPerLabelPerScene) continue;
      LabeledPair p;
      p.sample = relnet::MakePairSample(s, r, scene.width, scene.height, grid);
      p.sample.label = label;
      p.scene_seed = cfg.seed;
      p.scene_index = index;
      p.subject_id = s.id;
      p.reference_id = r.id;
      out.push_back(std::move(p));
      --quota[k];
      ++taken[k];
    }
  }
  for (std::size_t k = 0; k < relnet::kNumRelations; ++k) {
    if (quota[k] > 0) {
      ThrowData("pair generation: relation class \"" +
                std::string(relnet::RelationName(static_cast<RelationLabel>(k))) +
                "\" is unreachable with this configuration");
    }
  }
  return out;
}

std::string LabeledPairToJsonLine(const LabeledPair& pair) {
  const relnet::PairSample& s = pair.sample;
  std::string raster;
  raster.reserve(s.raster.values().size());
  for (double v : s.raster.values()) raster.push_back(RasterCode(v));
  json j;
  j["seed"] = pair.scene_seed;
  j["index"] = pair.scene_index;
  j["subject"] = pair.subject_id;
  j["reference"] = pair.reference_id;
  j["label"] = relnet::RelationName(s.label);
  j["grid"] = s.raster.width();
  j["raster"] = raster;
  j["v_poi"] = s.v_poi;
  j["v_cls"] = s.v_cls;
  return j.dump();
}

LabeledPair ParseLabeledPairJsonLine(std::string_view line) {
  LabeledPair p;
  try {
    const json j = json::parse(line);
    p.scene_seed = j.at("seed").get<std::uint64_t>();
    p.scene_index = j.at("index").get<std::uint64_t>();
    p.subject_id = j.at("subject").get<int>();
    p.reference_id = j.at("reference").get<int>();
    p.sample.label = relnet::ParseRelationName(j.at("label").get<std::string>());
    const auto grid = j.at("grid").get<std::size_t>();
    const auto raster = j.at("raster").get<std::string>();
    if (grid == 0 || raster.size() != grid * grid) ThrowData("pair raster size does not match grid");
    std::vector<double> values(raster.size());
    for (std::size_t i = 0; i < raster.size(); ++i) {
      switch (raster[i]) {
        case '0': values[i] = 0.0; break;
        case '1': values[i] = 0.5; break;
        case '2': values[i] = 1.0; break;
        default: ThrowData("pair raster has an invalid code");
      }
    }
    p.sample.raster = MaskRaster(grid, grid, std::move(values));
    const auto poi = j.at("v_poi").get<std::vector<double>>();
    const auto cls = j.at("v_cls").get<std::vector<double>>();
    if (poi.size() != kPositionVectorSize || cls.size() != kClassVectorSize) {
      ThrowData("pair vectors have the wrong length");
    }
    std::copy(poi.begin(), poi.end(), p.sample.v_poi.begin());
    std::copy(cls.begin(), cls.end(), p.sample.v_cls.begin());
  } catch (const json::exception& e) {
    ThrowData(std::string("malformed pair record: ") + e.what());
  }
  return p;
}

void WritePairsJsonl(const std::vector<LabeledPair>& pairs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ThrowUsage("cannot write pair file " + path);
  for (const LabeledPair& p : pairs) out << LabeledPairToJsonLine(p) << '\n';
}

std::vector<LabeledPair> ReadPairsJsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowUsage("cannot open pair file " + path);
  std::vector<LabeledPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      pairs.push_back(ParseLabeledPairJsonLine(line));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

}  // namespace oilsense::scenegen
