// Copyright 2026 The progstate Authors.
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

#include <cstdint>
#include <filesystem>
#include <vector>

namespace progstate {

// 8-bit grayscale raster, row-major.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const Image&) const = default;
};

// Real-valued raster with intensities in [0, 1]; the network input type.
struct FloatImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  FloatImage() = default;
  FloatImage(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const FloatImage&) const = default;
};

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
};

// Binary PGM (P5, maxval 255). Errors carry the offending path.
void write_pgm(const std::filesystem::path& path, const Image& image);
Image read_pgm(const std::filesystem::path& path);
PgmHeader read_pgm_header(const std::filesystem::path& path);

FloatImage to_float(const Image& image);

// Zero-pads on the bottom/right to (height, width); both must be >= the
// current dimensions.
Image pad_to(const Image& image, int height, int width);

// Axis-aligned crop rectangle in continuous pixel coordinates.
struct CropRect {
  double top = 0.0;
  double left = 0.0;
  double height = 0.0;
  double width = 0.0;
};

// Samples `rect` of `src` onto an (out_h, out_w) grid with bilinear
// interpolation (pixel-center convention, edge clamping), optionally mirrored
// horizontally.
FloatImage crop_resize(const FloatImage& src, const CropRect& rect, int out_h, int out_w,
                       bool hflip = false);

inline FloatImage resize_bilinear(const FloatImage& src, int out_h, int out_w) {
  return crop_resize(src, {0.0, 0.0, static_cast<double>(src.height),
                           static_cast<double>(src.width)},
                     out_h, out_w);
}

double mean_intensity(const Image& image);

}  // namespace progstate
