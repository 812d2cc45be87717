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

#include "progstate/fewshot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "progstate/errors.hpp"
#include "progstate/eval.hpp"
#include "progstate/parallel.hpp"
#include "progstate/stats.hpp"

namespace progstate {

namespace {

std::string_view class_name(int label) { return label == 1 ? "active" : "inactive"; }

void check_binary(std::span<const int> labels) {
  for (int y : labels) {
    if (y != 0 && y != 1) throw ConfigError(fmt::format("binary label expected, got {}", y));
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double balanced_accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) throw ConfigError("balanced_accuracy: size mismatch");
  std::size_t pos = 0, neg = 0, tp = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      ++pos;
      tp += predicted[i] == 1;
    } else {
      ++neg;
      tn += predicted[i] == 0;
    }
  }
  if (pos == 0 || neg == 0) throw ConfigError("balanced_accuracy: a class is missing");
  return 0.5 * (static_cast<double>(tp) / pos + static_cast<double>(tn) / neg);
}

std::vector<int> ThresholdRule::predict(std::span<const double> z) const {
  std::vector<int> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = predict(z[i]);
  return out;
}

ThresholdRule optimal_threshold(std::span<const double> z, std::span<const int> labels) {
  if (z.size() != labels.size()) throw ConfigError("optimal_threshold: size mismatch");
  check_binary(labels);
  const auto pos = static_cast<std::int64_t>(std::count(labels.begin(), labels.end(), 1));
  const auto neg = static_cast<std::int64_t>(labels.size()) - pos;
  if (pos == 0) throw ConfigError("optimal_threshold: class 'active' missing");
  if (neg == 0) throw ConfigError("optimal_threshold: class 'inactive' missing");

  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return z[a] < z[b]; });

  // Distinct values with per-value class counts.
  std::vector<double> values;
  std::vector<std::int64_t> pos_at, neg_at;
  for (auto i : order) {
    if (values.empty() || z[i] != values.back()) {
      values.push_back(z[i]);
      pos_at.push_back(0);
      neg_at.push_back(0);
    }
    (labels[i] == 1 ? pos_at : neg_at).back()++;
  }
  const std::size_t m = values.size();
  const double median = median_of(std::vector<double>(z.begin(), z.end()));
  constexpr double kInf = std::numeric_limits<double>::infinity();

  ThresholdRule best;
  std::int64_t best_score = -1;
  double best_dist = kInf;
  // Candidate j lies below values[j]; j = 0 is -inf and j = m is +inf.
  std::int64_t above_pos = pos, above_neg = neg;
  for (std::size_t j = 0; j <= m; ++j) {
    if (j > 0) {
      above_pos -= pos_at[j - 1];
      above_neg -= neg_at[j - 1];
    }
    const double thr = j == 0 ? -kInf : j == m ? kInf : 0.5 * (values[j - 1] + values[j]);
    const double dist = std::isinf(thr) ? kInf : std::abs(thr - median);
    for (int orient : {1, -1}) {
      // Balanced accuracy scaled by 2 * pos * neg, exact in integers.
      const std::int64_t tp = orient > 0 ? above_pos : pos - above_pos;
      const std::int64_t tn = orient > 0 ? neg - above_neg : above_neg;
      const std::int64_t score = tp * neg + tn * pos;
      bool better = score > best_score;
      if (score == best_score) {
        if (dist < best_dist) {
          better = true;
        } else if (dist == best_dist && orient > best.orientation) {
          better = true;
        }
      }
      if (better) {
        best_score = score;
        best_dist = dist;
        best.threshold = thr;
        best.orientation = orient;
      }
    }
  }
  best.fit_balanced_accuracy =
      static_cast<double>(best_score) / (2.0 * static_cast<double>(pos) * neg);
  return best;
}

ShotSplit draw_shots(std::span<const int> labels, int k, Rng& rng) {
  if (k <= 0) throw ConfigError("few-shot: k must be positive");
  check_binary(labels);
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (int c : {0, 1}) {
    if (by_class[c].size() <= static_cast<std::size_t>(k)) {
      throw ConfigError(fmt::format("few-shot: class '{}' has {} items, need more than k = {}",
                                    class_name(c), by_class[c].size(), k));
    }
  }
  ShotSplit split;
  std::vector<char> taken(labels.size(), 0);
  for (int c : {0, 1}) {
    auto& items = by_class[c];
    // Partial Fisher-Yates: the first k entries become the sample.
    for (int i = 0; i < k; ++i) {
      const std::size_t j = i + rng.below(items.size() - i);
      std::swap(items[i], items[j]);
      split.shots.push_back(items[i]);
      taken[items[i]] = 1;
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!taken[i]) split.rest.push_back(i);
  }
  return split;
}

FewShotResult fewshot_threshold(std::span<const double> z, std::span<const int> labels, int k,
                                Rng& rng) {
  if (z.size() != labels.size()) throw ConfigError("fewshot_threshold: size mismatch");
  FewShotResult result;
  result.split = draw_shots(labels, k, rng);
  std::vector<double> zs;
  std::vector<int> ys;
  for (auto i : result.split.shots) {
    zs.push_back(z[i]);
    ys.push_back(labels[i]);
  }
  result.rule = optimal_threshold(zs, ys);
  return result;
}

namespace {

template <typename Score>
std::vector<CurvePoint> run_curve(std::span<const int> labels, std::span<const int> ks,
                                  int repetitions, std::uint64_t seed, Score&& score) {
  if (repetitions <= 0) throw ConfigError("few-shot: repetitions must be positive");
  std::vector<CurvePoint> curve;
  for (int k : ks) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    CurvePoint point;
    point.k = k;
    for (int r = 0; r < repetitions; ++r) {
      const ShotSplit split = draw_shots(labels, k, rng);
      std::vector<int> truth;
      truth.reserve(split.rest.size());
      for (auto i : split.rest) truth.push_back(labels[i]);
      point.values.push_back(balanced_accuracy(score(split), truth));
    }
    const auto ms = mean_std(point.values);
    point.mean = ms.mean;
    point.std = ms.std;
    curve.push_back(std::move(point));
  }
  return curve;
}

}  // namespace

std::vector<CurvePoint> fewshot_curve(std::span<const double> z, std::span<const int> labels,
                                      std::span<const int> ks, int repetitions,
                                      std::uint64_t seed) {
  if (z.size() != labels.size()) throw ConfigError("fewshot_curve: size mismatch");
  return run_curve(labels, ks, repetitions, seed, [&](const ShotSplit& split) {
    std::vector<double> zs;
    std::vector<int> ys;
    for (auto i : split.shots) {
      zs.push_back(z[i]);
      ys.push_back(labels[i]);
    }
    const ThresholdRule rule = optimal_threshold(zs, ys);
    std::vector<int> pred;
    pred.reserve(split.rest.size());
    for (auto i : split.rest) pred.push_back(rule.predict(z[i]));
    return pred;
  });
}

void LogisticRegression::fit(const Eigen::MatrixXd& x, std::span<const int> labels, double ridge,
                             int max_iter) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size()) {
    throw ConfigError("logistic regression: bad input size");
  }
  check_binary(labels);
  mean_ = x.colwise().mean().transpose();
  scale_ = ((x.rowwise() - mean_.transpose()).array().square().colwise().mean().sqrt())
               .transpose();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(scale_[j] > 1e-12)) scale_[j] = 1.0;
  }
  Eigen::MatrixXd a(n, d + 1);
  a.leftCols(d) = (x.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array();
  a.col(d).setOnes();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[i];

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, ridge);
  penalty[d] = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = a * beta;
    Eigen::VectorXd p(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p[i] = sigmoid(eta[i]);
      w[i] = std::max(p[i] * (1.0 - p[i]), 1e-10);
    }
    const Eigen::VectorXd grad = a.transpose() * (p - y) + penalty.cwiseProduct(beta);
    Eigen::MatrixXd hess = a.transpose() * w.asDiagonal() * a;
    hess.diagonal() += penalty;
    hess(d, d) += 1e-9;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  if (!beta.allFinite()) throw NumericalError("logistic regression diverged");
  w_ = beta.head(d);
  b_ = beta[d];
}

double LogisticRegression::decision(const Eigen::Ref<const Eigen::VectorXd>& row) const {
  return ((row - mean_).array() / scale_.array()).matrix().dot(w_) + b_;
}

std::vector<int> LogisticRegression::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[i] = decision(x.row(i).transpose()) > 0.0 ? 1 : 0;
  }
  return out;
}

std::vector<CurvePoint> fewshot_curve_logistic(const Eigen::MatrixXd& features,
                                               std::span<const int> labels,
                                               std::span<const int> ks, int repetitions,
                                               std::uint64_t seed, double ridge) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ConfigError("fewshot_curve_logistic: size mismatch");
  }
  return run_curve(labels, ks, repetitions, seed, [&](const ShotSplit& split) {
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(split.shots.size()), features.cols());
    std::vector<int> ys;
    for (std::size_t r = 0; r < split.shots.size(); ++r) {
      xs.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(split.shots[r]));
      ys.push_back(labels[split.shots[r]]);
    }
    LogisticRegression lr;
    lr.fit(xs, ys, ridge);
    std::vector<int> pred;
    pred.reserve(split.rest.size());
    for (auto i : split.rest) {
      pred.push_back(lr.decision(features.row(static_cast<Eigen::Index>(i)).transpose()) > 0.0);
    }
    return pred;
  });
}

std::vector<double> disease_logits(const ModelParams& params, std::span<const FloatImage> images,
                                   unsigned threads) {
  if (params.kind != ModelKind::kSiamese) throw ConfigError("disease_logits needs a siamese model");
  SiameseNet net(params.encoder);
  std::vector<double> out(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    out[i] = net.encode(params.values, images[i]).z_d;
  });
  return out;
}

Eigen::MatrixXd feature_matrix(const ModelParams& params, std::span<const FloatImage> images,
                               unsigned threads) {
  const Eigen::Index f = params.encoder.feature_dim;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), f);
  parallel_for(images.size(), threads, [&](std::size_t i) {
    const auto row = image_features(params, images[i]);
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), f);
  });
  return out;
}

std::string curve_csv(std::span<const NamedCurve> curves) {
  std::string out = "model,k,mean_bal_acc,std_bal_acc,repetitions\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += fmt::format("{},{},{},{},{}\n", c.model, p.k, format_double(p.mean),
                         format_double(p.std), p.values.size());
    }
  }
  return out;
}

}  // namespace progstate
