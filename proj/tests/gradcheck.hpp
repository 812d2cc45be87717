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

#include <algorithm>
#include <cmath>
#include <vector>

#include "progstate/encoder.hpp"
#include "progstate/model.hpp"
#include "progstate/objective.hpp"
#include "test_support.hpp"

namespace progstate::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose stencil crosses a ReLU kink
};

// Relative error with a small floor so vanishing gradients compare absolutely.
inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-5});
}

struct GradProblem {
  EncoderConfig encoder;
  ModelParams params;
  AlphaTable alpha;
  std::vector<std::pair<FloatImage, FloatImage>> images;
  std::vector<Progression> labels;
  double lambda = 0.15;
};

// Random small architecture, parameters, images, labels and slopes.
inline GradProblem random_grad_problem(std::uint64_t seed) {
  Rng rng(seed);
  GradProblem p;
  const int blocks = 1 + static_cast<int>(rng.below(3));
  const int scale = 1 << (blocks - 1);
  p.encoder.input_height = scale * (2 + static_cast<int>(rng.below(3)));
  p.encoder.input_width = scale * (2 + static_cast<int>(rng.below(5)));
  p.encoder.channels.clear();
  for (int b = 0; b < blocks; ++b) p.encoder.channels.push_back(1 + static_cast<int>(rng.below(4)));
  p.encoder.feature_dim = 2 + static_cast<int>(rng.below(5));
  p.encoder.activation = rng.below(2) == 0 ? Activation::kRelu : Activation::kSoftplus;
  SiameseNet net(p.encoder);
  p.params = net.init(rng);
  // Non-zero heads so every parameter receives gradient.
  for (std::size_t i = net.theta_count(); i < p.params.values.size(); ++i) {
    p.params.values[i] = rng.normal(0.0, 0.5);
  }
  const int n_pairs = 4;
  p.alpha = AlphaTable(n_pairs);
  for (int i = 0; i < n_pairs; ++i) {
    // Keep |alpha| away from the kink of |.|.
    const double a = rng.uniform(0.1, 1.0);
    p.alpha.values()[i] = rng.below(2) == 0 ? a : -a;
    p.images.emplace_back(random_image(p.encoder.input_height, p.encoder.input_width, rng),
                          random_image(p.encoder.input_height, p.encoder.input_width, rng));
    p.labels.push_back(kAllProgressions[i % kNumClasses]);
  }
  p.lambda = rng.uniform(0.0, 0.5);
  return p;
}

inline double problem_loss(const GradProblem& p, const ModelParams& params,
                           const AlphaTable& alpha) {
  SiameseNet net(p.encoder);
  std::vector<PairPrediction> preds;
  std::vector<TargetEncoding> targets;
  std::vector<double> alphas;
  for (std::size_t i = 0; i < p.images.size(); ++i) {
    preds.push_back(forward_pair(net, params, p.images[i].first, p.images[i].second, &alpha,
                                 static_cast<int>(i)));
    targets.push_back(encode_target(p.labels[i]));
    alphas.push_back(alpha.alpha(static_cast<int>(i)));
  }
  return total_loss(preds, targets, p.lambda, alphas);
}

// Sign pattern of every ReLU pre-activation for all images of the problem.
inline std::vector<bool> relu_pattern(const GradProblem& p, const ModelParams& params) {
  std::vector<bool> signs;
  Encoder enc(p.encoder);
  EncoderCache cache;
  for (const auto& [a, b] : p.images) {
    for (const FloatImage* img : {&a, &b}) {
      enc.forward(params.values, *img, cache);
      for (const auto& m : cache.pre) {
        for (Eigen::Index i = 0; i < m.size(); ++i) signs.push_back(m.data()[i] > 0.0);
      }
      for (Eigen::Index i = 0; i < cache.fc_pre.size(); ++i) signs.push_back(cache.fc_pre[i] > 0.0);
    }
  }
  return signs;
}

// Central differences against the analytic gradient of the mean batch loss
// with respect to theta, both heads and alpha.
inline GradCheckResult check_gradients(const GradProblem& p, double h = 1e-5) {
  SiameseNet net(p.encoder);
  const std::size_t n = p.params.values.size();
  std::vector<double> grad(n, 0.0);
  std::vector<double> alpha_grad(p.alpha.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(p.images.size());
  for (std::size_t i = 0; i < p.images.size(); ++i) {
    EncoderCache c1, c2;
    const auto l1 = net.encode(p.params.values, p.images[i].first, c1);
    const auto l2 = net.encode(p.params.values, p.images[i].second, c2);
    const auto loss = pair_loss({l1.z_d, l2.z_d, l1.z_o, l2.z_o, p.alpha.alpha(static_cast<int>(i))},
                                encode_target(p.labels[i]), p.lambda);
    std::vector<double> g(n, 0.0);
    net.backward(p.params.values, c1, loss.d_zd1, loss.d_zo1, g);
    net.backward(p.params.values, c2, loss.d_zd2, loss.d_zo2, g);
    for (std::size_t k = 0; k < n; ++k) grad[k] += inv * g[k];
    alpha_grad[i] += inv * loss.d_alpha;
  }

  GradCheckResult r;
  const bool relu = p.encoder.activation == Activation::kRelu;
  for (std::size_t k = 0; k < n; ++k) {
    ModelParams plus = p.params, minus = p.params;
    plus.values[k] += h;
    minus.values[k] -= h;
    if (relu && relu_pattern(p, plus) != relu_pattern(p, minus)) {
      ++r.skipped;
      continue;
    }
    const double numeric =
        (problem_loss(p, plus, p.alpha) - problem_loss(p, minus, p.alpha)) / (2.0 * h);
    r.max_rel_error = std::max(r.max_rel_error, rel_error(grad[k], numeric));
    ++r.checked;
  }
  for (std::size_t k = 0; k < p.alpha.size(); ++k) {
    AlphaTable plus = p.alpha, minus = p.alpha;
    plus.values()[k] += h;
    minus.values()[k] -= h;
    const double numeric =
        (problem_loss(p, p.params, plus) - problem_loss(p, p.params, minus)) / (2.0 * h);
    r.max_rel_error = std::max(r.max_rel_error, rel_error(alpha_grad[k], numeric));
    ++r.checked;
  }
  return r;
}

}  // namespace progstate::testing
