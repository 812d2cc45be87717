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

#include "progstate/metrics.hpp"

#include <cmath>

#include "progstate/errors.hpp"
#include "progstate/labels.hpp"

namespace progstate {

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (int i = 0; i < k_; ++i) s += at(i, i);
  return s;
}

std::int64_t ConfusionMatrix::row_sum(int truth) const {
  std::int64_t s = 0;
  for (int j = 0; j < k_; ++j) s += at(truth, j);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int predicted) const {
  std::int64_t s = 0;
  for (int i = 0; i < k_; ++i) s += at(i, predicted);
  return s;
}

double rk_correlation(const ConfusionMatrix& cm) {
  const double s = static_cast<double>(cm.total());
  if (s == 0.0) throw ConfigError("rk_correlation: empty confusion matrix");
  const double c = static_cast<double>(cm.trace());
  double tp = 0.0, pp = 0.0, tt = 0.0;
  for (int k = 0; k < cm.classes(); ++k) {
    const double t = static_cast<double>(cm.row_sum(k));
    const double p = static_cast<double>(cm.col_sum(k));
    tp += t * p;
    pp += p * p;
    tt += t * t;
  }
  const double f_pred = s * s - pp;
  const double f_true = s * s - tt;
  if (f_pred == 0.0 || f_true == 0.0) return 0.0;
  return (c * s - tp) / std::sqrt(f_pred * f_true);
}

namespace {

std::string class_name(int k, int classes) {
  if (classes == kNumClasses) return std::string(to_string(static_cast<Progression>(k)));
  return std::to_string(k);
}

}  // namespace

MetricSuite metric_suite(const ConfusionMatrix& cm) {
  const std::int64_t s = cm.total();
  if (s == 0) throw ConfigError("metric_suite: empty confusion matrix");
  MetricSuite m;
  const int K = cm.classes();
  auto ratio = [&](double num, double den, const char* stat, int k) {
    if (den == 0.0) {
      m.zero_denominator.push_back(std::string(stat) + "[" + class_name(k, K) + "]");
      return 0.0;
    }
    return num / den;
  };
  for (int k = 0; k < K; ++k) {
    const double tp = static_cast<double>(cm.at(k, k));
    const double fp = static_cast<double>(cm.col_sum(k)) - tp;
    const double fn = static_cast<double>(cm.row_sum(k)) - tp;
    const double tn = static_cast<double>(s) - tp - fp - fn;
    m.precision += ratio(tp, tp + fp, "precision", k);
    m.recall += ratio(tp, tp + fn, "recall", k);
    m.specificity += ratio(tn, tn + fp, "specificity", k);
    m.f1 += ratio(2.0 * tp, 2.0 * tp + fp + fn, "f1", k);
  }
  m.precision /= K;
  m.recall /= K;
  m.specificity /= K;
  m.f1 /= K;
  m.balanced_accuracy = m.recall;
  m.rk = rk_correlation(cm);
  return m;
}

}  // namespace progstate
