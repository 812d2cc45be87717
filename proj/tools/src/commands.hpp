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
#include <optional>
#include <string>
#include <vector>

namespace progstate::cli {

struct GenArgs {
  std::string config;
  std::string out;
  bool force = false;
  bool quiet = false;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
  std::optional<int> patients;
  std::optional<int> visits;
  std::optional<int> scans;
  std::optional<int> height;
  std::optional<int> width;
  std::optional<double> tau;
  std::optional<double> flip_rate;
  std::optional<double> other_rate;
};

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  bool force = false;
  bool quiet = false;
  unsigned threads = 1;
  unsigned jobs = 1;
  std::optional<int> folds;
  std::optional<double> holdout;
  std::optional<std::uint64_t> split_seed;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<double> alpha_lr;
  std::optional<double> lambda;
  bool noise_estimation = false;
  bool naive_baseline = false;
  bool augment = false;
};

struct EvalArgs {
  std::string config;
  std::string run;
  std::vector<std::string> checkpoints;
  std::string data;
  std::string out;
  bool force = false;
  bool oracle = false;
  unsigned threads = 1;
  std::optional<double> gamma_threshold;
};

struct FewshotArgs {
  std::string config;
  std::string ours;
  std::string ours_noise;
  std::string naive;
  std::string out;
  bool force = false;
  unsigned threads = 1;
  std::vector<int> ks;
  std::optional<int> repetitions;
  std::optional<std::uint64_t> seed;
  std::optional<int> images;
};

struct InspectArgs {
  std::string checkpoint;
  bool params = false;
};

// Each command throws progstate errors; main maps them to exit codes.
void run_gen(const GenArgs& args);
void run_train(const TrainArgs& args);
void run_eval(const EvalArgs& args);
void run_fewshot(const FewshotArgs& args);
void run_inspect(const InspectArgs& args);

}  // namespace progstate::cli
