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

#include "progstate/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "progstate/errors.hpp"

namespace progstate {
namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
bool next_token(std::istream& in, std::string& token) {
  token.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) return true;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return !token.empty();
}

PgmHeader parse_header(std::istream& in, const std::filesystem::path& path) {
  std::string tok;
  if (!next_token(in, tok) || tok != "P5") {
    throw FormatError("not a binary PGM (missing P5 magic): " + path.string());
  }
  PgmHeader h;
  int* fields[] = {&h.width, &h.height, &h.maxval};
  for (int* f : fields) {
    if (!next_token(in, tok)) throw FormatError("truncated PGM header: " + path.string());
    try {
      *f = std::stoi(tok);
    } catch (const std::exception&) {
      throw FormatError("malformed PGM header field '" + tok + "': " + path.string());
    }
  }
  // next_token consumed exactly one whitespace byte after maxval.
  if (h.width <= 0 || h.height <= 0 || h.maxval != 255) {
    throw FormatError("unsupported PGM geometry or maxval (need maxval 255): " + path.string());
  }
  return h;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

PgmHeader read_pgm_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  return parse_header(in, path);
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  PgmHeader h = parse_header(in, path);
  Image img(h.height, h.width);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw FormatError("truncated PGM pixel data: " + path.string());
  }
  return img;
}

FloatImage to_float(const Image& image) {
  FloatImage out(image.height, image.width);
  std::transform(image.pixels.begin(), image.pixels.end(), out.pixels.begin(),
                 [](std::uint8_t v) { return v / 255.0; });
  return out;
}

Image pad_to(const Image& image, int height, int width) {
  if (height < image.height || width < image.width) {
    throw ConfigError("pad_to target smaller than image");
  }
  Image out(height, width, 0);
  for (int y = 0; y < image.height; ++y) {
    std::copy_n(&image.pixels[static_cast<std::size_t>(y) * image.width], image.width,
                &out.pixels[static_cast<std::size_t>(y) * width]);
  }
  return out;
}

FloatImage crop_resize(const FloatImage& src, const CropRect& rect, int out_h, int out_w,
                       bool hflip) {
  FloatImage out(out_h, out_w);
  const double sy = rect.height / out_h;
  const double sx = rect.width / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    double fy = rect.top + (oy + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
    int y0 = static_cast<int>(std::floor(fy));
    int y1 = std::min(y0 + 1, src.height - 1);
    double wy = fy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      int tx = hflip ? out_w - 1 - ox : ox;
      double fx = rect.left + (tx + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
      int x0 = static_cast<int>(std::floor(fx));
      int x1 = std::min(x0 + 1, src.width - 1);
      double wx = fx - x0;
      double top = src.at(y0, x0) * (1.0 - wx) + src.at(y0, x1) * wx;
      double bot = src.at(y1, x0) * (1.0 - wx) + src.at(y1, x1) * wx;
      out.at(oy, ox) = top * (1.0 - wy) + bot * wy;
    }
  }
  return out;
}

double mean_intensity(const Image& image) {
  if (image.pixels.empty()) return 0.0;
  double sum = std::accumulate(image.pixels.begin(), image.pixels.end(), 0.0);
  return sum / static_cast<double>(image.pixels.size());
}

}  // namespace progstate
