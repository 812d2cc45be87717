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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "progstate/adamw.hpp"
#include "progstate/checkpoint.hpp"
#include "progstate/dataset.hpp"
#include "progstate/encoder.hpp"
#include "progstate/eval.hpp"
#include "progstate/model.hpp"

namespace progstate {

struct TrainConfig {
  ModelKind model = ModelKind::kSiamese;
  EncoderConfig encoder;
  bool augment = false;  // paired crop and flip
  AugmentParams augmentation;
  AdamWParams optimizer;
  // Learning rate of the per-pair alpha table; the main rate when unset.
  std::optional<double> alpha_lr = 1e-2;
  int epochs = 60;
  int batch_size = 32;
  double lambda = 0.15;
  // Learnable per-pair slopes; when off alpha stays 0.
  bool noise_estimation = false;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  double effective_alpha_lr() const { return alpha_lr.value_or(optimizer.lr); }
  // Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
// Unknown keys are rejected; missing keys keep their defaults.
void from_json(const nlohmann::json& j, TrainConfig& c);

// Per-epoch means. For the naive model bce_d holds the categorical
// cross-entropy and bce_o stays 0.
struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_bce_d = 0.0;
  double train_bce_o = 0.0;
  double train_reg = 0.0;
  double val_loss = 0.0;
  double val_bce_d = 0.0;
  double val_bce_o = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct FoldResult {
  FoldSpec spec;
  Checkpoint best;   // minimal validation loss, earliest on ties
  Checkpoint last;   // state after the final epoch
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains one model on the fold's training patients with balanced sampling and
// selects the epoch with the lowest validation loss (slope 1, no alpha term).
// Randomness derives from (config.seed, fold index) only, and results do not
// depend on config.threads. Throws NumericalError on a non-finite loss.
FoldResult train_fold(const Dataset& dataset, const FoldSpec& fold, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

// Validation loss of a model on the given pairs: mean BCE_o + BCE_d with slope
// 1 (siamese) or categorical cross-entropy (naive). Returns (total, d, o).
std::array<double, 3> validation_loss(const ModelParams& params, const Dataset& dataset,
                                      std::span<const int> pair_indices, unsigned threads = 1);

struct FoldReport {
  int fold = 0;
  DecisionThresholds thresholds;  // calibrated on the fold's validation pairs
  MetricSuite validation;
};

struct CrossValidation {
  std::vector<FoldResult> folds;
  std::vector<FoldReport> reports;
  MetricAggregate aggregate;
};

// Validation metrics of one trained fold (siamese: calibrated boundary;
// naive: arg-max decision).
FoldReport evaluate_fold(const Dataset& dataset, const FoldResult& fold, unsigned threads = 1);

// One train_fold per fold of the plan; `jobs` folds run concurrently.
CrossValidation cross_validate(const Dataset& dataset, const SplitPlan& plan,
                               const TrainConfig& config, unsigned jobs = 1,
                               const std::function<void(int, const EpochRecord&)>& on_epoch = {});

// CSV with header epoch,train_loss,train_bce_d,train_bce_o,train_reg,val_loss,val_bce_d,val_bce_o.
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace progstate
