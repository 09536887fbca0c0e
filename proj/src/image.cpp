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
#include "oilsense/image.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "oilsense/error.hpp"

namespace oilsense {

static_assert(sizeof(Rgb) == 3, "Rgb must be tightly packed");

GrayImage::GrayImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height), pixels_(width * height, fill) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width * height) ThrowData("gray image: pixel count mismatch");
}

ColorImage::ColorImage(std::size_t width, std::size_t height)
    : width_(width), height_(height), pixels_(width * height, Rgb{0, 0, 0}) {}

ColorImage::ColorImage(std::size_t width, std::size_t height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width * height) ThrowData("color image: pixel count mismatch");
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

  std::size_t ReadUnsigned() {
    SkipSpaceAndComments();
    std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 24)) ThrowData("pnm: header value too large");
      ++pos_;
    }
    if (pos_ == start) ThrowData("pnm: malformed header");
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t RasterOffset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      ThrowData("pnm: missing separator before raster");
    }
    return pos_ + 1;
  }

  void Skip(std::size_t n) { pos_ += n; }

 private:
  void SkipSpaceAndComments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

AnyImage DecodePnm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    ThrowData("pnm: only binary P5/P6 is supported");
  }
  const bool color = bytes[1] == '6';
  HeaderReader header(bytes);
  header.Skip(2);
  const std::size_t width = header.ReadUnsigned();
  const std::size_t height = header.ReadUnsigned();
  const std::size_t maxval = header.ReadUnsigned();
  if (width == 0 || height == 0) ThrowData("pnm: zero dimension");
  if (maxval != 255) ThrowData("pnm: only maxval 255 is supported");
  const std::size_t offset = header.RasterOffset();
  const std::size_t channels = color ? 3 : 1;
  const std::size_t need = width * height * channels;
  if (bytes.size() < offset + need) ThrowData("pnm: truncated raster");

  const auto* raster = reinterpret_cast<const std::uint8_t*>(bytes.data() + offset);
  if (!color) return GrayImage(width, height, std::vector<std::uint8_t>(raster, raster + need));
  std::vector<Rgb> px(width * height);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = {raster[3 * i], raster[3 * i + 1], raster[3 * i + 2]};
  }
  return ColorImage(width, height, std::move(px));
}

std::string EncodePnm(const AnyImage& image) {
  std::ostringstream out(std::ios::binary);
  if (const auto* gray = std::get_if<GrayImage>(&image)) {
    out << "P5\n" << gray->width() << ' ' << gray->height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray->pixels().data()),
              static_cast<std::streamsize>(gray->size()));
  } else {
    const auto& rgb = std::get<ColorImage>(image);
    out << "P6\n" << rgb.width() << ' ' << rgb.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.pixels().data()),
              static_cast<std::streamsize>(3 * rgb.size()));
  }
  return out.str();
}

AnyImage ReadPnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowData("cannot open image " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return DecodePnm(buf.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void WritePnm(const AnyImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) ThrowUsage("cannot write image " + path);
  out << EncodePnm(image);
}

}  // namespace oilsense
