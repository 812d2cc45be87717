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
#include <optional>
#include <span>

#include "progstate/labels.hpp"
#include "progstate/model.hpp"

namespace progstate {

// Probabilities entering a log are clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-12;

// WORSE -> 0, STABLE -> 0.5, BETTER -> 1 for the progression target; OTHER
// has no progression target and y_o = 1.
struct TargetEncoding {
  std::optional<double> y_d;
  double y_o = 0.0;
};

TargetEncoding encode_target(Progression label);

// Binary cross-entropy with a possibly fractional target y in [0, 1].
// Throws ConfigError if y is outside [0, 1].
double bce(double y, double p);

struct PairLogits {
  double z_d1 = 0.0;
  double z_d2 = 0.0;
  double z_o1 = 0.0;
  double z_o2 = 0.0;
  double alpha = 0.0;
};

// Per-pair objective terms and their derivatives with respect to the four
// logits and alpha. Values equal bce(y, progression_prob(...)) etc. but are
// evaluated in logit space; derivatives vanish where the clamp is active.
struct PairLoss {
  double bce_d = 0.0;
  double bce_o = 0.0;
  double reg = 0.0;
  double total = 0.0;
  double d_zd1 = 0.0;
  double d_zd2 = 0.0;
  double d_zo1 = 0.0;
  double d_zo2 = 0.0;
  double d_alpha = 0.0;
};

PairLoss pair_loss(const PairLogits& logits, const TargetEncoding& target, double lambda);

// Mean over the batch of BCE(y_o, y_o_hat) + BCE(y_d, y_d_hat) [if y_d present]
// + lambda * |alpha|. Throws ConfigError on an empty batch or mismatched sizes.
double total_loss(std::span<const PairPrediction> predictions,
                  std::span<const TargetEncoding> targets, double lambda,
                  std::span<const double> alphas);

struct CrossEntropy {
  double loss = 0.0;
  std::array<double, 4> d_logits{};
};

// Categorical cross-entropy over the four progression classes.
CrossEntropy categorical_cross_entropy(const std::array<double, 4>& logits, Progression label);

}  // namespace progstate
