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

#include "progstate/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "progstate/errors.hpp"

namespace progstate {
namespace {

const double kLogClamp = std::log(kProbClamp);

// -log(p) for p = sigmoid(u), clamped, with d/du.
struct LogTerm {
  double value;
  double slope;
};

// log sigmoid(u) = -softplus(-u); derivative sigmoid(-u).
LogTerm log_sigmoid(double u) {
  const double v = -softplus(-u);
  if (v < kLogClamp) return {kLogClamp, 0.0};
  return {v, sigmoid(-u)};
}

}  // namespace

TargetEncoding encode_target(Progression label) {
  switch (label) {
    case Progression::kWorse: return {0.0, 0.0};
    case Progression::kStable: return {0.5, 0.0};
    case Progression::kBetter: return {1.0, 0.0};
    case Progression::kOther: return {std::nullopt, 1.0};
  }
  return {};
}

double bce(double y, double p) {
  if (!(y >= 0.0 && y <= 1.0)) {
    throw ConfigError("bce: target " + std::to_string(y) + " outside [0, 1]");
  }
  p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return -(y * std::log(p) + (1.0 - y) * std::log1p(-p));
}

PairLoss pair_loss(const PairLogits& in, const TargetEncoding& target, double lambda) {
  PairLoss out;

  // Other head: log(1 - y_o) = -(sp(z_o1) + sp(z_o2)) = -S,
  //             log(y_o)     = log(-expm1(-S)).
  {
    const double s = softplus(in.z_o1) + softplus(in.z_o2);
    const double sig1 = sigmoid(in.z_o1);
    const double sig2 = sigmoid(in.z_o2);
    double d_s = 0.0;
    if (target.y_o > 0.0) {
      const double log_p = std::log(-std::expm1(-s));
      if (log_p >= kLogClamp) {
        out.bce_o -= target.y_o * log_p;
        d_s -= target.y_o / std::expm1(s);
      } else {
        out.bce_o -= target.y_o * kLogClamp;
      }
    }
    if (target.y_o < 1.0) {
      if (-s >= kLogClamp) {
        out.bce_o += (1.0 - target.y_o) * s;
        d_s += 1.0 - target.y_o;
      } else {
        out.bce_o -= (1.0 - target.y_o) * kLogClamp;
      }
    }
    out.d_zo1 = d_s * sig1;
    out.d_zo2 = d_s * sig2;
  }

  // Progression head: u = gamma * delta, y_d_hat = sigmoid(u).
  if (target.y_d) {
    const double y = *target.y_d;
    const double delta = pair_delta(in.z_d1, in.z_d2);
    const double gamma = gamma_of(in.alpha);
    const double u = gamma * delta;
    const LogTerm pos = log_sigmoid(u);    // log y_d_hat
    const LogTerm neg = log_sigmoid(-u);   // log (1 - y_d_hat)
    out.bce_d = -(y * pos.value + (1.0 - y) * neg.value);
    const double d_u = -(y * pos.slope - (1.0 - y) * neg.slope);
    out.d_zd1 = d_u * gamma;
    out.d_zd2 = -d_u * gamma;
    out.d_alpha = d_u * delta * gamma * std::numbers::ln2;
  }

  out.reg = lambda * std::abs(in.alpha);
  if (in.alpha > 0.0) out.d_alpha += lambda;
  if (in.alpha < 0.0) out.d_alpha -= lambda;

  out.total = out.bce_d + out.bce_o + out.reg;
  return out;
}

double total_loss(std::span<const PairPrediction> predictions,
                  std::span<const TargetEncoding> targets, double lambda,
                  std::span<const double> alphas) {
  if (predictions.empty()) throw ConfigError("total_loss: empty batch");
  if (predictions.size() != targets.size() || predictions.size() != alphas.size()) {
    throw ConfigError("total_loss: batch size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& p = predictions[i];
    double term = bce(targets[i].y_o, p.y_o);
    if (targets[i].y_d) term += bce(*targets[i].y_d, p.y_d);
    term += lambda * std::abs(alphas[i]);
    sum += term;
  }
  return sum / static_cast<double>(predictions.size());
}

CrossEntropy categorical_cross_entropy(const std::array<double, 4>& logits, Progression label) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - m);
  const double log_z = m + std::log(sum);
  CrossEntropy ce;
  const int k = index_of(label);
  ce.loss = log_z - logits[k];
  for (int i = 0; i < 4; ++i) ce.d_logits[i] = std::exp(logits[i] - log_z) - (i == k ? 1.0 : 0.0);
  return ce;
}

}  // namespace progstate
