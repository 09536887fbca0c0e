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
#ifndef OILSENSE_IMAGE_HPP_
#define OILSENSE_IMAGE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace oilsense {

// Row-major 8-bit single-channel image.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  std::uint8_t& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

using Rgb = std::array<std::uint8_t, 3>;

// Row-major 8-bit RGB image.
class ColorImage {
 public:
  ColorImage() = default;
  ColorImage(std::size_t width, std::size_t height);
  ColorImage(std::size_t width, std::size_t height, std::vector<Rgb> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  const std::vector<Rgb>& pixels() const { return pixels_; }
  const Rgb& at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  Rgb& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

  friend bool operator==(const ColorImage&, const ColorImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<Rgb> pixels_;
};

using AnyImage = std::variant<GrayImage, ColorImage>;

// Binary PGM (P5) / PPM (P6), maxval 255. Header comments are skipped.
AnyImage ReadPnm(const std::string& path);
AnyImage DecodePnm(const std::string& bytes);
std::string EncodePnm(const AnyImage& image);
void WritePnm(const AnyImage& image, const std::string& path);

}  // namespace oilsense

#endif  // OILSENSE_IMAGE_HPP_
