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

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "progstate/dataset.hpp"
#include "progstate/labels.hpp"
#include "progstate/metrics.hpp"
#include "progstate/model.hpp"
#include "progstate/stats.hpp"

namespace progstate {

// Symmetric band [0.5 - t, 0.5 + t] on y_d is STABLE; y_o > t_o is OTHER.
struct DecisionThresholds {
  double t = 0.0;
  double t_o = 0.5;
};

// OTHER takes precedence; then WORSE below the band, BETTER above, else STABLE.
Progression classify_pair(double y_d, double y_o, const DecisionThresholds& th);
// Progression-only rule (ignores the other head).
Progression classify_progression(double y_d, double t);

ConfusionMatrix confusion_matrix(std::span<const double> y_d, std::span<const double> y_o,
                                 std::span<const Progression> labels,
                                 const DecisionThresholds& th);

inline constexpr int kBoundaryGridSize = 100;
inline constexpr double kBoundaryGridStep = 0.005;

// Grid search t in {0, 0.005, ..., 0.495} maximising 4-class macro F1;
// ties resolve to the smaller t; t_o stays at 0.5. Throws ConfigError on
// empty input.
DecisionThresholds calibrate_boundary(std::span<const double> y_d, std::span<const double> y_o,
                                      std::span<const Progression> labels);

// Model outputs on dataset pairs, in the order of `pair_indices`. Images are
// centre-resized to the encoder input size and each distinct image is
// encoded once; the slope is 1.
std::vector<PairPrediction> predict_pairs(const ModelParams& params, const Dataset& dataset,
                                          std::span<const int> pair_indices,
                                          unsigned threads = 1);
std::vector<std::array<double, 4>> predict_naive(const ModelParams& params,
                                                 const Dataset& dataset,
                                                 std::span<const int> pair_indices,
                                                 unsigned threads = 1);

// Predictions reproducing the stored labels exactly (y_d in {0.01, 0.5, 0.99},
// y_o in {0.01, 0.99}); used to validate the evaluation path end to end.
std::vector<PairPrediction> oracle_predictions(const Dataset& dataset,
                                               std::span<const int> pair_indices);

ConfusionMatrix confusion_argmax(std::span<const std::array<double, 4>> probs,
                                 std::span<const Progression> labels);

std::vector<Progression> labels_of(const Dataset& dataset, std::span<const int> pair_indices);

// CSV with header pair_id,delta_d,y_o,label,clean_label.
std::string delta_scatter_csv(const Dataset& dataset, std::span<const int> pair_indices,
                              std::span<const PairPrediction> predictions);

enum class TransitionGroup { kBetterWorse = 0, kBetterStable = 1, kWorseStable = 2, kSameLabel = 3 };
std::string_view to_string(TransitionGroup g);

struct GammaGroupStats {
  std::size_t n = 0;
  std::size_t below = 0;
  double fraction() const { return n == 0 ? 0.0 : static_cast<double>(below) / n; }
};

struct GammaReport {
  double threshold = 0.85;
  std::array<GammaGroupStats, 4> groups{};
  std::vector<std::pair<int, double>> per_pair_gamma;  // (pair_id, gamma)

  const GammaGroupStats& group(TransitionGroup g) const { return groups[static_cast<int>(g)]; }
  // better<->stable and worse<->stable pooled.
  GammaGroupStats progression_stable() const;
};

// Scan-adjacent pairs are pairs of one patient and visit transition whose
// scan_index differs by one. Every non-OTHER adjacency among `pair_indices`
// contributes the slopes of both of its pairs to the group of its label
// transition. Throws FormatError if no adjacency exists.
GammaReport gamma_adjacency_report(const AlphaTable& alpha, const Dataset& dataset,
                                   std::span<const int> pair_indices, double threshold = 0.85);

void to_json(nlohmann::json& j, const GammaReport& r);
void to_json(nlohmann::json& j, const MetricSuite& m);
void to_json(nlohmann::json& j, const DecisionThresholds& t);

// Mean and population std of each metric across folds.
struct MetricAggregate {
  MetricSuite mean;
  MetricSuite std;
};
MetricAggregate aggregate_metrics(std::span<const MetricSuite> folds);

// CSV with header row,f1,rk,specificity,bal_acc,precision,recall and one row
// per fold ("fold<i>") followed by "mean" and "std".
std::string metrics_table_csv(std::span<const MetricSuite> folds);

// Writes `content` to `path`, throwing IoError with the path on failure.
void write_text(const std::filesystem::path& path, const std::string& content);

// Shortest round-trip representation, stable across runs.
std::string format_double(double v);

}  // namespace progstate
