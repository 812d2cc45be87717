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
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "progstate/encoder.hpp"
#include "progstate/image.hpp"
#include "progstate/rng.hpp"

namespace progstate {

// Numerically safe logistic function and log-sigmoid helpers.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// softplus(x) = log(1 + e^x) = -log(sigmoid(-x))
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

// Progression logit difference between the first and second image.
inline double pair_delta(double z_d1, double z_d2) { return z_d1 - z_d2; }

// sigma(gamma * delta). Throws ConfigError for gamma <= 0.
double progression_prob(double delta, double gamma = 1.0);

// Probability that at least one image is ungradable:
// 1 - sigma(-z_o1) * sigma(-z_o2), evaluated as -expm1(-(sp(z_o1) + sp(z_o2))).
double other_prob(double z_o1, double z_o2);

inline double gamma_of(double alpha) { return std::exp2(alpha); }

enum class ModelKind { kSiamese, kNaive };

std::string_view to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view s);

// Flat parameter vector plus the architecture it belongs to.
//   kSiamese: [theta (encoder) | psi1: w_d, b_d | psi2: w_o, b_o]
//   kNaive:   [theta (encoder) | W (4 x 2F, row-major) | b (4)]
struct ModelParams {
  ModelKind kind = ModelKind::kSiamese;
  EncoderConfig encoder;
  std::vector<double> values;

  bool operator==(const ModelParams&) const = default;
};

// Dense per-pair uncertainty parameters, indexed by pair_id.
class AlphaTable {
 public:
  AlphaTable() = default;
  explicit AlphaTable(std::size_t n) : alpha_(n, 0.0) {}

  std::size_t size() const { return alpha_.size(); }
  // Pairs outside the table use alpha = 0.
  double alpha(int pair_id) const {
    return pair_id >= 0 && static_cast<std::size_t>(pair_id) < alpha_.size() ? alpha_[pair_id]
                                                                              : 0.0;
  }
  double gamma(int pair_id) const { return gamma_of(alpha(pair_id)); }

  std::vector<double>& values() { return alpha_; }
  const std::vector<double>& values() const { return alpha_; }

  bool operator==(const AlphaTable&) const = default;

 private:
  std::vector<double> alpha_;
};

struct ImageLogits {
  double z_d = 0.0;
  double z_o = 0.0;
};

struct PairPrediction {
  double z_d1 = 0.0;
  double z_d2 = 0.0;
  double z_o1 = 0.0;
  double z_o2 = 0.0;
  double delta_d = 0.0;
  double gamma = 1.0;
  double y_d = 0.5;
  double y_o = 0.75;
};

PairPrediction combine(const ImageLogits& a, const ImageLogits& b, double gamma = 1.0);

// Siamese network: shared encoder, independent affine disease and other heads.
class SiameseNet {
 public:
  explicit SiameseNet(EncoderConfig config);

  const Encoder& encoder() const { return encoder_; }
  std::size_t param_count() const { return param_count_; }
  std::size_t theta_count() const { return encoder_.param_count(); }
  std::size_t disease_head_offset() const { return encoder_.param_count(); }
  std::size_t other_head_offset() const {
    return encoder_.param_count() + encoder_.feature_dim() + 1;
  }

  ModelParams init(Rng& rng) const;

  ImageLogits encode(std::span<const double> params, const FloatImage& image) const;
  ImageLogits encode(std::span<const double> params, const FloatImage& image,
                     EncoderCache& cache) const;
  void backward(std::span<const double> params, const EncoderCache& cache, double d_zd,
                double d_zo, std::span<double> grad) const;

 private:
  Encoder encoder_;
  std::size_t param_count_;
};

// Composes encode, pair_delta, gamma_of, progression_prob and other_prob.
// Without a pair_id the slope is 1.
PairPrediction forward_pair(const SiameseNet& net, const ModelParams& params,
                            const FloatImage& img1, const FloatImage& img2,
                            const AlphaTable* alpha = nullptr,
                            std::optional<int> pair_id = std::nullopt);

// Comparator: shared encoder, concatenated features, 4-way softmax.
class NaiveNet {
 public:
  explicit NaiveNet(EncoderConfig config);

  const Encoder& encoder() const { return encoder_; }
  std::size_t param_count() const { return param_count_; }

  ModelParams init(Rng& rng) const;

  // Class order follows Progression.
  std::array<double, 4> logits(std::span<const double> params, const EncoderCache& c1,
                               const EncoderCache& c2) const;
  void backward(std::span<const double> params, const EncoderCache& c1, const EncoderCache& c2,
                const std::array<double, 4>& d_logits, std::span<double> grad) const;

  std::array<double, 4> probabilities(std::span<const double> params, const FloatImage& img1,
                                      const FloatImage& img2) const;

 private:
  Encoder encoder_;
  std::size_t param_count_;
};

std::array<double, 4> softmax(const std::array<double, 4>& logits);

// Penultimate feature vector of a single image (either model kind).
std::vector<double> image_features(const ModelParams& params, const FloatImage& image);

}  // namespace progstate
