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
#include <string>
#include <vector>

namespace progstate {

// K x K count matrix; rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int k) : k_(k), counts_(static_cast<std::size_t>(k) * k, 0) {}

  int classes() const { return k_; }
  void add(int truth, int predicted, std::int64_t n = 1) { at(truth, predicted) += n; }
  std::int64_t& at(int truth, int predicted) {
    return counts_.at(static_cast<std::size_t>(truth) * k_ + predicted);
  }
  std::int64_t at(int truth, int predicted) const {
    return counts_.at(static_cast<std::size_t>(truth) * k_ + predicted);
  }

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int truth) const;
  std::int64_t col_sum(int predicted) const;

 private:
  int k_;
  std::vector<std::int64_t> counts_;
};

// Gorodkin's K-category correlation coefficient:
//   (c*s - sum_k t_k p_k) / sqrt((s^2 - sum_k p_k^2) (s^2 - sum_k t_k^2))
// with s = total, c = trace, t_k = row sums, p_k = column sums. Returns 0 if
// either factor under the root is 0. Throws ConfigError on an empty matrix.
double rk_correlation(const ConfusionMatrix& cm);

// Macro (unweighted) averages of one-vs-rest statistics over all K classes.
// A per-class statistic with a zero denominator contributes 0 and is listed
// in zero_denominator as "<stat>[<class>]". Per-class F1 is
// 2 tp / (2 tp + fp + fn).
struct MetricSuite {
  double f1 = 0.0;
  double rk = 0.0;
  double specificity = 0.0;
  double balanced_accuracy = 0.0;  // equals macro recall
  double precision = 0.0;
  double recall = 0.0;
  std::vector<std::string> zero_denominator;
};

MetricSuite metric_suite(const ConfusionMatrix& cm);

}  // namespace progstate
