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

#include <cmath>
#include <fstream>
#include <limits>

#include "progstate/checkpoint.hpp"
#include "progstate/errors.hpp"
#include "test_support.hpp"

namespace progstate {
namespace {

using testing::TempDir;

Checkpoint random_checkpoint(std::uint64_t seed) {
  EncoderConfig c;
  c.input_height = 8;
  c.input_width = 16;
  c.channels = {2, 3};
  c.feature_dim = 4;
  SiameseNet net(c);
  Rng rng(seed);
  Checkpoint ck;
  ck.model = net.init(rng);
  for (double& v : ck.model.values) v = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
  ck.alpha = AlphaTable(17);
  for (double& a : ck.alpha.values()) a = rng.normal();
  ck.epoch = 12;
  ck.val_loss = 0.1 + rng.uniform();
  ck.config = {{"lr", 1e-4}};
  ck.meta = {{"fold", 2}};
  return ck;
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  TempDir dir;
  const Checkpoint ck = random_checkpoint(1);
  save_checkpoint(ck, dir / "ck.json");
  const Checkpoint back = load_checkpoint(dir / "ck.json");
  EXPECT_EQ(back, ck);
}

TEST(CheckpointTest, MissingFileIsIoError) {
  TempDir dir;
  EXPECT_THROW(load_checkpoint(dir / "absent.json"), IoError);
}

TEST(CheckpointTest, MalformedContentIsFormatError) {
  TempDir dir;
  auto write = [&](const std::string& text) {
    std::ofstream(dir / "bad.json") << text;
    return dir / "bad.json";
  };
  EXPECT_THROW(load_checkpoint(write("{not json")), FormatError);
  EXPECT_THROW(load_checkpoint(write("{\"format\": \"other\"}")), FormatError);

  nlohmann::json j = random_checkpoint(2);
  j["version"] = 99;
  EXPECT_THROW(load_checkpoint(write(j.dump())), FormatError);

  j = random_checkpoint(2);
  j["params"].erase(0);
  EXPECT_THROW(load_checkpoint(write(j.dump())), FormatError);

  j = random_checkpoint(2);
  j["kind"] = "transformer";
  EXPECT_THROW(load_checkpoint(write(j.dump())), FormatError);
}

TEST(CheckpointTest, ErrorNamesThePath) {
  TempDir dir;
  std::ofstream(dir / "broken.json") << "[]";
  try {
    load_checkpoint(dir / "broken.json");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("broken.json"), std::string::npos);
  }
}

TEST(CheckpointTest, NonFiniteParametersAreRejected) {
  TempDir dir;
  Checkpoint ck = random_checkpoint(3);
  ck.model.values[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(save_checkpoint(ck, dir / "nan.json"), NumericalError);
}

}  // namespace
}  // namespace progstate
