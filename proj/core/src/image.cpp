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

#include "maskppf/image.hpp"

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

namespace maskppf {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BoundingBox mask_bbox(const BinaryMask& m) {
  int x0 = m.width, y0 = m.height, x1 = -1, y1 = -1;
  for (int v = 0; v < m.height; ++v)
    for (int u = 0; u < m.width; ++u)
      if (m.at(u, v)) {
        x0 = std::min(x0, u);
        y0 = std::min(y0, v);
        x1 = std::max(x1, u);
        y1 = std::max(y1, v);
      }
  if (x1 < 0) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp; the message is stashed for the caller.
struct PngError {
  std::string message;
};

void png_error_fn(png_structp png, png_const_charp msg) {
  static_cast<PngError*>(png_get_error_ptr(png))->message = msg;
  png_longjmp(png, 1);
}
void png_warning_fn(png_structp, png_const_charp) {}

// Decoded rows with samples in host order; channels in {1, 2, 3, 4}.
struct RawPng {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::uint8_t> data;  // bit_depth 8: bytes; 16: native uint16 pairs
  std::size_t stride() const { return static_cast<std::size_t>(width) * channels * (bit_depth / 8); }
};

RawPng read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open PNG: " + path.string());
  PngError err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  RawPng out;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("malformed PNG " + path.string() + ": " + err.message);
  }
  {
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) {
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
      png_set_swap(png);
#endif
    }
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    out.data.resize(out.stride() * out.height);
    rows.resize(out.height);
    for (int r = 0; r < out.height; ++r) rows[r] = out.data.data() + r * out.stride();
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
               const std::uint8_t* data, std::size_t stride) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write PNG: " + path.string());
  PngError err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG write failed " + path.string() + ": " + err.message);
  }
  {
    png_init_io(png, fp.get());
    png_set_compression_level(png, 1);
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) {
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__
      png_set_swap(png);
#endif
    }
    for (int r = 0; r < height; ++r) png_write_row(png, const_cast<std::uint8_t*>(data + r * stride));
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
}

std::uint8_t luma(const std::uint8_t* px, int channels) {
  if (channels >= 3) return static_cast<std::uint8_t>((px[0] * 77 + px[1] * 150 + px[2] * 29) >> 8);
  return px[0];
}

}  // namespace

DepthMap read_depth_png(const std::filesystem::path& path, double depth_scale) {
  RawPng raw = read_png(path);
  if (raw.bit_depth != 16 || raw.channels != 1)
    throw std::runtime_error("depth PNG must be 16-bit single channel: " + path.string());
  DepthMap d(raw.width, raw.height, depth_scale);
  const auto* src = reinterpret_cast<const std::uint16_t*>(raw.data.data());
  std::copy(src, src + d.raw.size(), d.raw.begin());
  return d;
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth) {
  write_png(path, depth.width, depth.height, PNG_COLOR_TYPE_GRAY, 16,
            reinterpret_cast<const std::uint8_t*>(depth.raw.data()), depth.width * 2u);
}

ColorImage read_color_png(const std::filesystem::path& path) {
  RawPng raw = read_png(path);
  if (raw.bit_depth != 8) throw std::runtime_error("color PNG must be 8-bit: " + path.string());
  ColorImage img(raw.width, raw.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const std::uint8_t* px = raw.data.data() + i * raw.channels;
    if (raw.channels >= 3)
      img.pixels[i] = {px[0], px[1], px[2]};
    else
      img.pixels[i] = {px[0], px[0], px[0]};
  }
  return img;
}

void write_color_png(const std::filesystem::path& path, const ColorImage& img) {
  write_png(path, img.width, img.height, PNG_COLOR_TYPE_RGB, 8,
            reinterpret_cast<const std::uint8_t*>(img.pixels.data()), img.width * 3u);
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  RawPng raw = read_png(path);
  if (raw.bit_depth != 8) throw std::runtime_error("mask PNG must be 8-bit: " + path.string());
  BinaryMask m(raw.width, raw.height);
  for (std::size_t i = 0; i < m.bits.size(); ++i)
    m.bits[i] = luma(raw.data.data() + i * raw.channels, raw.channels) != 0 ? 1 : 0;
  return m;
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.bits.size());
  std::transform(mask.bits.begin(), mask.bits.end(), bytes.begin(),
                 [](std::uint8_t b) { return b ? std::uint8_t{255} : std::uint8_t{0}; });
  write_png(path, mask.width, mask.height, PNG_COLOR_TYPE_GRAY, 8, bytes.data(), mask.width);
}

RgbaImage read_rgba_png(const std::filesystem::path& path) {
  RawPng raw = read_png(path);
  if (raw.bit_depth != 8) throw std::runtime_error("RGBA PNG must be 8-bit: " + path.string());
  RgbaImage img(raw.width, raw.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const std::uint8_t* px = raw.data.data() + i * raw.channels;
    switch (raw.channels) {
      case 4: img.pixels[i] = {px[0], px[1], px[2], px[3]}; break;
      case 3: img.pixels[i] = {px[0], px[1], px[2], 255}; break;
      case 2: img.pixels[i] = {px[0], px[0], px[0], px[1]}; break;
      default: img.pixels[i] = {px[0], px[0], px[0], 255}; break;
    }
  }
  return img;
}

void write_rgba_png(const std::filesystem::path& path, const RgbaImage& img) {
  write_png(path, img.width, img.height, PNG_COLOR_TYPE_RGBA, 8,
            reinterpret_cast<const std::uint8_t*>(img.pixels.data()), img.width * 4u);
}

}  // namespace maskppf
