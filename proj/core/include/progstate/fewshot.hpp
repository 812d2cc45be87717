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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "progstate/image.hpp"
#include "progstate/model.hpp"
#include "progstate/rng.hpp"

namespace progstate {

// Binary labels throughout: 1 = active, 0 = inactive.
double balanced_accuracy(std::span<const int> predicted, std::span<const int> labels);

// Single-score classifier: active iff orientation * (z - threshold) > 0.
// The threshold may be +-infinity.
struct ThresholdRule {
  double threshold = 0.0;
  int orientation = 1;
  double fit_balanced_accuracy = 0.0;

  int predict(double z) const {
    return orientation > 0 ? (z > threshold ? 1 : 0) : (z < threshold ? 1 : 0);
  }
  std::vector<int> predict(std::span<const double> z) const;
};

// Candidates are midpoints between consecutive distinct sorted values plus
// -inf and +inf, in both orientations; the rule maximising balanced accuracy
// on (z, labels) wins. Ties go to the candidate nearest the median of z, then
// to orientation +1, then to the smaller threshold. Throws ConfigError when a
// class is missing.
ThresholdRule optimal_threshold(std::span<const double> z, std::span<const int> labels);

struct ShotSplit {
  std::vector<std::size_t> shots;  // k inactive then k active
  std::vector<std::size_t> rest;   // ascending
};

// Draws k items per class without replacement. Throws ConfigError for k = 0
// and when a class has no more than k items (evaluation needs the rest),
// naming the class.
ShotSplit draw_shots(std::span<const int> labels, int k, Rng& rng);

struct FewShotResult {
  ThresholdRule rule;
  ShotSplit split;
};

FewShotResult fewshot_threshold(std::span<const double> z, std::span<const int> labels, int k,
                                Rng& rng);

struct CurvePoint {
  int k = 0;
  double mean = 0.0;
  double std = 0.0;  // population
  std::vector<double> values;
};

// For every k, `repetitions` fresh shot draws; each calibrates on the shots
// and scores balanced accuracy on the remaining items. The shot draws depend
// only on (labels, k, seed), so curves of different models share them.
std::vector<CurvePoint> fewshot_curve(std::span<const double> z, std::span<const int> labels,
                                      std::span<const int> ks, int repetitions,
                                      std::uint64_t seed);

// L2-regularised logistic regression fitted by Newton iterations on
// standardised features; the intercept is not penalised.
class LogisticRegression {
 public:
  void fit(const Eigen::MatrixXd& x, std::span<const int> labels, double ridge = 1.0,
           int max_iter = 50);
  double decision(const Eigen::Ref<const Eigen::VectorXd>& row) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  const Eigen::VectorXd& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  Eigen::VectorXd w_;
  double b_ = 0.0;
};

// Same protocol as fewshot_curve with a logistic classifier on feature rows.
std::vector<CurvePoint> fewshot_curve_logistic(const Eigen::MatrixXd& features,
                                               std::span<const int> labels,
                                               std::span<const int> ks, int repetitions,
                                               std::uint64_t seed, double ridge = 1.0);

// z_d of each image (siamese models).
std::vector<double> disease_logits(const ModelParams& params, std::span<const FloatImage> images,
                                   unsigned threads = 1);
// Penultimate features, one row per image.
Eigen::MatrixXd feature_matrix(const ModelParams& params, std::span<const FloatImage> images,
                               unsigned threads = 1);

struct NamedCurve {
  std::string model;
  std::vector<CurvePoint> points;
};

// CSV with header model,k,mean_bal_acc,std_bal_acc,repetitions.
std::string curve_csv(std::span<const NamedCurve> curves);

}  // namespace progstate
