// Copyright 2026 The maskppf Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace maskppf {

using Rgb = std::array<std::uint8_t, 3>;

/// 16-bit depth image; raw 0 = no measurement, metric depth in meters is
/// raw * depth_scale * 1e-3.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<std::uint16_t> raw;
  double depth_scale = 1.0;

  DepthMap() = default;
  DepthMap(int w, int h, double scale = 1.0)
      : width(w), height(h), raw(static_cast<std::size_t>(w) * h, 0), depth_scale(scale) {}

  std::uint16_t at(int u, int v) const { return raw[static_cast<std::size_t>(v) * width + u]; }
  std::uint16_t& at(int u, int v) { return raw[static_cast<std::size_t>(v) * width + u]; }
  double meters(int u, int v) const { return at(u, v) * depth_scale * 1e-3; }
};

struct ColorImage {
  int width = 0, height = 0;
  std::vector<Rgb> pixels;

  ColorImage() = default;
  ColorImage(int w, int h, Rgb fill = {0, 0, 0})
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  const Rgb& at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
  Rgb& at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
};

struct BinaryMask {
  int width = 0, height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1

  BinaryMask() = default;
  BinaryMask(int w, int h, bool fill = false)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool on = true) { bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  bool operator==(const BinaryMask&) const = default;
};

/// Inclusive-exclusive pixel box [x, x+w) x [y, y+h).
struct BoundingBox {
  int x = 0, y = 0, w = 0, h = 0;
  bool operator==(const BoundingBox&) const = default;
};

/// Tight box around set pixels; all-zero box for an empty mask.
BoundingBox mask_bbox(const BinaryMask& m);

/// RGBA image used for cut-paste crops.
struct RgbaImage {
  int width = 0, height = 0;
  std::vector<std::array<std::uint8_t, 4>> pixels;

  RgbaImage() = default;
  RgbaImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, {0, 0, 0, 0}) {}
  const std::array<std::uint8_t, 4>& at(int u, int v) const {
    return pixels[static_cast<std::size_t>(v) * width + u];
  }
  std::array<std::uint8_t, 4>& at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
};

// PNG codecs. Readers throw std::runtime_error on missing or malformed files.
DepthMap read_depth_png(const std::filesystem::path& path, double depth_scale);
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth);
ColorImage read_color_png(const std::filesystem::path& path);
void write_color_png(const std::filesystem::path& path, const ColorImage& img);
/// 8-bit grayscale; any nonzero pixel is foreground.
BinaryMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
RgbaImage read_rgba_png(const std::filesystem::path& path);
void write_rgba_png(const std::filesystem::path& path, const RgbaImage& img);

}  // namespace maskppf
