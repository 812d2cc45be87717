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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace progstate::cli {

// Creates `dir` for a new run. An existing non-empty directory is an error
// unless `force` is set, in which case its contents are removed first.
void prepare_run_dir(const std::filesystem::path& dir, bool force);

// Git blob hash: sha1("blob <size>\0" + content), lowercase hex.
std::string git_blob_sha1(const std::filesystem::path& file);

// Writes config.json ({"command", "config"}) and inputs.json (path and blob
// hash of every input file, in the given order).
void write_run_metadata(const std::filesystem::path& dir, const std::string& command,
                        const nlohmann::json& config,
                        const std::vector<std::filesystem::path>& inputs);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace progstate::cli
