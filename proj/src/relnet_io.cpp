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
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oilsense/error.hpp"
#include "oilsense/relnet.hpp"

namespace oilsense::relnet {
namespace {

using nlohmann::json;

json ConfigToJson(const RelNetConfig& c) {
  return {{"grid", c.grid},
          {"conv1_filters", c.conv1_filters},
          {"conv2_filters", c.conv2_filters},
          {"fc1_width", c.fc1_width},
          {"fc2_width", c.fc2_width},
          {"variant", VariantName(c.variant)}};
}

std::size_t SizeField(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    ThrowData(std::string("weight file: config.") + key + " missing or not a non-negative integer");
  }
  return it->get<std::size_t>();
}

RelNetConfig ConfigFromJson(const json& j) {
  if (!j.is_object()) ThrowData("weight file: config must be an object");
  RelNetConfig c;
  c.grid = SizeField(j, "grid");
  c.conv1_filters = SizeField(j, "conv1_filters");
  c.conv2_filters = SizeField(j, "conv2_filters");
  c.fc1_width = SizeField(j, "fc1_width");
  c.fc2_width = SizeField(j, "fc2_width");
  if (auto it = j.find("variant"); it != j.end()) {
    if (!it->is_string()) ThrowData("weight file: config.variant must be a string");
    c.variant = ParseVariantName(it->get<std::string>());
  }
  try {
    c.Validate();
  } catch (const Error& e) {
    ThrowData(std::string("weight file: ") + e.what());
  }
  return c;
}

std::string ShapeString(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace

std::string SerializeParams(const RelNetParams& params) {
  json doc;
  doc["version"] = kWeightFileVersion;
  doc["config"] = ConfigToJson(params.config);
  json tensors = json::object();
  params.ForEach([&tensors](std::string_view name, const Tensor& t, bool) {
    tensors[std::string(name)] = {{"shape", t.shape}, {"data", t.data}};
  });
  doc["tensors"] = std::move(tensors);
  return doc.dump();
}

RelNetParams ParseParams(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    ThrowData(std::string("weight file: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) ThrowData("weight file: expected a JSON object");
  auto version = doc.find("version");
  if (version == doc.end() || !version->is_number_integer()) ThrowData("weight file: missing version");
  if (version->get<int>() != kWeightFileVersion) {
    ThrowData("weight file: version " + std::to_string(version->get<int>()) + " is not supported (expected " +
              std::to_string(kWeightFileVersion) + ")");
  }
  auto config = doc.find("config");
  if (config == doc.end()) ThrowData("weight file: missing config");
  auto tensors = doc.find("tensors");
  if (tensors == doc.end() || !tensors->is_object()) ThrowData("weight file: missing tensors");

  RelNetParams params = RelNetParams::Zeros(ConfigFromJson(*config));
  params.ForEach([&tensors](std::string_view name, Tensor& t, bool) {
    const std::string key(name);
    auto it = tensors->find(key);
    if (it == tensors->end()) ThrowData("weight file: missing tensor " + key);
    std::vector<std::size_t> shape;
    std::vector<double> data;
    try {
      shape = it->at("shape").get<std::vector<std::size_t>>();
      data = it->at("data").get<std::vector<double>>();
    } catch (const json::exception&) {
      ThrowData("weight file: tensor " + key + " is malformed");
    }
    if (shape != t.shape) {
      ThrowData("weight file: shape mismatch for tensor " + key + ": file has " + ShapeString(shape) +
                ", config requires " + ShapeString(t.shape));
    }
    if (data.size() != t.size()) ThrowData("weight file: tensor " + key + " has wrong element count");
    for (double v : data) {
      if (!std::isfinite(v)) ThrowData("weight file: tensor " + key + " has a non-finite value");
    }
    t.data = std::move(data);
  });
  return params;
}

RelNetParams ParseParams(std::string_view text, const RelNetConfig& expected) {
  RelNetParams params = ParseParams(text);
  const RelNetParams want = RelNetParams::Zeros(expected);
  std::vector<std::pair<std::string, std::vector<std::size_t>>> shapes;
  want.ForEach([&shapes](std::string_view name, const Tensor& t, bool) {
    shapes.emplace_back(std::string(name), t.shape);
  });
  std::size_t i = 0;
  params.ForEach([&](std::string_view name, const Tensor& t, bool) {
    if (t.shape != shapes[i].second) {
      ThrowData("weight file: shape mismatch for tensor " + std::string(name) + ": file has " +
                ShapeString(t.shape) + ", expected " + ShapeString(shapes[i].second));
    }
    ++i;
  });
  if (params.config.variant != expected.variant) {
    ThrowData("weight file: input variant " + std::string(VariantName(params.config.variant)) +
              " does not match expected " + std::string(VariantName(expected.variant)));
  }
  return params;
}

void SaveParams(const RelNetParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ThrowUsage("cannot write weight file " + path);
  out << SerializeParams(params) << '\n';
  if (!out) ThrowUsage("failed writing weight file " + path);
}

RelNetParams LoadParams(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowUsage("cannot open weight file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return ParseParams(buf.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace oilsense::relnet
