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

#include "progstate/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "progstate/errors.hpp"

namespace progstate {

namespace {

std::size_t expected_params(ModelKind kind, const EncoderConfig& enc) {
  return kind == ModelKind::kSiamese ? SiameseNet(enc).param_count()
                                     : NaiveNet(enc).param_count();
}

}  // namespace

void to_json(nlohmann::json& j, const Checkpoint& c) {
  for (double v : c.model.values) {
    if (!std::isfinite(v)) throw NumericalError("checkpoint: non-finite parameter");
  }
  j = nlohmann::json{{"format", kCheckpointFormat},
                     {"version", kCheckpointVersion},
                     {"kind", to_string(c.model.kind)},
                     {"encoder", c.model.encoder},
                     {"param_count", c.model.values.size()},
                     {"epoch", c.epoch},
                     {"val_loss", c.val_loss},
                     {"config", c.config},
                     {"meta", c.meta},
                     {"params", c.model.values},
                     {"alpha", c.alpha.values()}};
}

void from_json(const nlohmann::json& j, Checkpoint& c) {
  try {
    if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat) {
      throw FormatError("not a progstate checkpoint");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw FormatError(fmt::format("unsupported checkpoint version {}", version));
    }
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!kind) throw FormatError("unknown model kind " + j.at("kind").dump());
    c.model.kind = *kind;
    c.model.encoder = j.at("encoder").get<EncoderConfig>();
    c.model.values = j.at("params").get<std::vector<double>>();
    const auto declared = j.at("param_count").get<std::size_t>();
    const auto expected = expected_params(c.model.kind, c.model.encoder);
    if (declared != c.model.values.size() || declared != expected) {
      throw FormatError(fmt::format("parameter count mismatch: declared {}, stored {}, "
                                    "architecture needs {}",
                                    declared, c.model.values.size(), expected));
    }
    c.alpha.values() = j.at("alpha").get<std::vector<double>>();
    c.epoch = j.at("epoch").get<int>();
    c.val_loss = j.at("val_loss").get<double>();
    c.config = j.value("config", nlohmann::json::object());
    c.meta = j.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const nlohmann::json j = checkpoint;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    return j.get<Checkpoint>();
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace progstate
