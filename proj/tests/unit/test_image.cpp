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

#include <gtest/gtest.h>

#include <fstream>

#include "progstate/errors.hpp"
#include "progstate/image.hpp"
#include "test_support.hpp"

namespace progstate {
namespace {

using testing::TempDir;

TEST(PgmTest, RoundTrip) {
  TempDir dir;
  Image img(5, 7);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 9);
  write_pgm(dir / "a.pgm", img);
  EXPECT_EQ(read_pgm(dir / "a.pgm"), img);
  const auto h = read_pgm_header(dir / "a.pgm");
  EXPECT_EQ(h.width, 7);
  EXPECT_EQ(h.height, 5);
  EXPECT_EQ(h.maxval, 255);
}

TEST(PgmTest, HeaderIsStandardP5) {
  TempDir dir;
  write_pgm(dir / "a.pgm", Image(2, 3, 10));
  std::ifstream in(dir / "a.pgm", std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, 3);
  EXPECT_EQ(h, 2);
  EXPECT_EQ(maxval, 255);
}

TEST(PgmTest, CommentsInHeaderAreSkipped) {
  TempDir dir;
  {
    std::ofstream out(dir / "c.pgm", std::ios::binary);
    out << "P5\n# made by hand\n2 1\n255\n";
    out.put(static_cast<char>(3));
    out.put(static_cast<char>(200));
  }
  const Image img = read_pgm(dir / "c.pgm");
  EXPECT_EQ(img.width, 2);
  EXPECT_EQ(img.at(0, 1), 200);
}

TEST(PgmTest, RejectsBadInput) {
  TempDir dir;
  {
    std::ofstream out(dir / "p2.pgm");
    out << "P2\n1 1\n255\n0\n";
  }
  EXPECT_THROW(read_pgm(dir / "p2.pgm"), FormatError);
  {
    std::ofstream out(dir / "short.pgm", std::ios::binary);
    out << "P5\n4 4\n255\n";
    out << "abc";
  }
  EXPECT_THROW(read_pgm(dir / "short.pgm"), FormatError);
  EXPECT_THROW(read_pgm(dir / "missing.pgm"), IoError);
  try {
    read_pgm(dir / "missing.pgm");
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("missing.pgm"), std::string::npos);
  }
}

TEST(ImageTest, CropResizeFullRectIsIdentity) {
  Rng rng(1);
  const FloatImage src = testing::random_image(6, 10, rng);
  const FloatImage out = crop_resize(src, {0, 0, 6, 10}, 6, 10);
  EXPECT_EQ(out, src);
}

TEST(ImageTest, CropResizeFlipMirrors) {
  Rng rng(2);
  const FloatImage src = testing::random_image(4, 8, rng);
  const FloatImage out = crop_resize(src, {0, 0, 4, 8}, 4, 8, true);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) EXPECT_DOUBLE_EQ(out.at(y, x), src.at(y, 7 - x));
  }
}

TEST(ImageTest, DownsampleByTwoAveragesPairs) {
  FloatImage src(1, 4);
  src.pixels = {0.0, 1.0, 0.2, 0.6};
  const FloatImage out = resize_bilinear(src, 1, 2);
  EXPECT_NEAR(out.at(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(out.at(0, 1), 0.4, 1e-12);
}

TEST(ImageTest, PadToKeepsContent) {
  Image img(2, 2, 9);
  const Image padded = pad_to(img, 3, 4);
  EXPECT_EQ(padded.height, 3);
  EXPECT_EQ(padded.width, 4);
  EXPECT_EQ(padded.at(1, 1), 9);
  EXPECT_EQ(padded.at(2, 3), 0);
}

}  // namespace
}  // namespace progstate
