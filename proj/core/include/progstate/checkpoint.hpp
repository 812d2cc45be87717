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

#include <filesystem>
#include <string_view>

#include <nlohmann/json.hpp>

#include "progstate/model.hpp"

namespace progstate {

inline constexpr std::string_view kCheckpointFormat = "progstate-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams model;
  AlphaTable alpha;
  int epoch = 0;
  double val_loss = 0.0;
  nlohmann::json config = nlohmann::json::object();  // training configuration echo
  nlohmann::json meta = nlohmann::json::object();    // fold, split, provenance

  bool operator==(const Checkpoint&) const = default;
};

void to_json(nlohmann::json& j, const Checkpoint& c);
// Throws FormatError on a wrong format tag, version or parameter count.
void from_json(const nlohmann::json& j, Checkpoint& c);

// JSON container; doubles round-trip exactly.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws IoError when the file cannot be read and FormatError when it is not
// a valid checkpoint.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace progstate
