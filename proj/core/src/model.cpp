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

#include "progstate/model.hpp"

#include <algorithm>

#include "progstate/errors.hpp"

namespace progstate {

double progression_prob(double delta, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("progression_prob: gamma must be > 0");
  return sigmoid(gamma * delta);
}

double other_prob(double z_o1, double z_o2) {
  return -std::expm1(-(softplus(z_o1) + softplus(z_o2)));
}

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kSiamese ? "siamese" : "naive";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "siamese") return ModelKind::kSiamese;
  if (s == "naive") return ModelKind::kNaive;
  return std::nullopt;
}

PairPrediction combine(const ImageLogits& a, const ImageLogits& b, double gamma) {
  PairPrediction p;
  p.z_d1 = a.z_d;
  p.z_d2 = b.z_d;
  p.z_o1 = a.z_o;
  p.z_o2 = b.z_o;
  p.delta_d = pair_delta(a.z_d, b.z_d);
  p.gamma = gamma;
  p.y_d = progression_prob(p.delta_d, gamma);
  p.y_o = other_prob(a.z_o, b.z_o);
  return p;
}

SiameseNet::SiameseNet(EncoderConfig config)
    : encoder_(std::move(config)),
      param_count_(encoder_.param_count() + 2 * (encoder_.feature_dim() + 1)) {}

ModelParams SiameseNet::init(Rng& rng) const {
  ModelParams p{ModelKind::kSiamese, encoder_.config(), std::vector<double>(param_count_, 0.0)};
  encoder_.init(p.values, rng);
  const int f = encoder_.feature_dim();
  const double sd = std::sqrt(1.0 / f);
  for (std::size_t head : {disease_head_offset(), other_head_offset()}) {
    for (int i = 0; i < f; ++i) p.values[head + i] = sd * rng.normal();
    p.values[head + f] = 0.0;
  }
  return p;
}

ImageLogits SiameseNet::encode(std::span<const double> params, const FloatImage& image) const {
  EncoderCache cache;
  return encode(params, image, cache);
}

ImageLogits SiameseNet::encode(std::span<const double> params, const FloatImage& image,
                               EncoderCache& cache) const {
  encoder_.forward(params, image, cache);
  const int f = encoder_.feature_dim();
  Eigen::Map<const Eigen::VectorXd> w_d(params.data() + disease_head_offset(), f);
  Eigen::Map<const Eigen::VectorXd> w_o(params.data() + other_head_offset(), f);
  ImageLogits out;
  out.z_d = w_d.dot(cache.features) + params[disease_head_offset() + f];
  out.z_o = w_o.dot(cache.features) + params[other_head_offset() + f];
  return out;
}

void SiameseNet::backward(std::span<const double> params, const EncoderCache& cache, double d_zd,
                          double d_zo, std::span<double> grad) const {
  const int f = encoder_.feature_dim();
  Eigen::Map<Eigen::VectorXd>(grad.data() + disease_head_offset(), f) += d_zd * cache.features;
  grad[disease_head_offset() + f] += d_zd;
  Eigen::Map<Eigen::VectorXd>(grad.data() + other_head_offset(), f) += d_zo * cache.features;
  grad[other_head_offset() + f] += d_zo;
  Eigen::Map<const Eigen::VectorXd> w_d(params.data() + disease_head_offset(), f);
  Eigen::Map<const Eigen::VectorXd> w_o(params.data() + other_head_offset(), f);
  Eigen::VectorXd d_features = d_zd * w_d + d_zo * w_o;
  encoder_.backward(params, cache, {d_features.data(), static_cast<std::size_t>(f)}, grad);
}

PairPrediction forward_pair(const SiameseNet& net, const ModelParams& params,
                            const FloatImage& img1, const FloatImage& img2,
                            const AlphaTable* alpha, std::optional<int> pair_id) {
  if (params.kind != ModelKind::kSiamese) throw ConfigError("forward_pair needs a siamese model");
  const double gamma = (alpha != nullptr && pair_id) ? alpha->gamma(*pair_id) : 1.0;
  return combine(net.encode(params.values, img1), net.encode(params.values, img2), gamma);
}

NaiveNet::NaiveNet(EncoderConfig config)
    : encoder_(std::move(config)),
      param_count_(encoder_.param_count() + 4 * (2 * encoder_.feature_dim() + 1)) {}

ModelParams NaiveNet::init(Rng& rng) const {
  ModelParams p{ModelKind::kNaive, encoder_.config(), std::vector<double>(param_count_, 0.0)};
  encoder_.init(p.values, rng);
  const int f2 = 2 * encoder_.feature_dim();
  const double sd = std::sqrt(1.0 / f2);
  for (int i = 0; i < 4 * f2; ++i) p.values[encoder_.param_count() + i] = sd * rng.normal();
  return p;
}

std::array<double, 4> NaiveNet::logits(std::span<const double> params, const EncoderCache& c1,
                                       const EncoderCache& c2) const {
  const int f = encoder_.feature_dim();
  const std::size_t base = encoder_.param_count();
  std::array<double, 4> out{};
  for (int k = 0; k < 4; ++k) {
    const double* w = params.data() + base + static_cast<std::size_t>(k) * 2 * f;
    Eigen::Map<const Eigen::VectorXd> w1(w, f), w2(w + f, f);
    out[k] = w1.dot(c1.features) + w2.dot(c2.features) + params[base + 8 * f + k];
  }
  return out;
}

void NaiveNet::backward(std::span<const double> params, const EncoderCache& c1,
                        const EncoderCache& c2, const std::array<double, 4>& d_logits,
                        std::span<double> grad) const {
  const int f = encoder_.feature_dim();
  const std::size_t base = encoder_.param_count();
  Eigen::VectorXd d_f1 = Eigen::VectorXd::Zero(f);
  Eigen::VectorXd d_f2 = Eigen::VectorXd::Zero(f);
  for (int k = 0; k < 4; ++k) {
    const std::size_t off = base + static_cast<std::size_t>(k) * 2 * f;
    Eigen::Map<const Eigen::VectorXd> w1(params.data() + off, f), w2(params.data() + off + f, f);
    Eigen::Map<Eigen::VectorXd>(grad.data() + off, f) += d_logits[k] * c1.features;
    Eigen::Map<Eigen::VectorXd>(grad.data() + off + f, f) += d_logits[k] * c2.features;
    grad[base + 8 * f + k] += d_logits[k];
    d_f1 += d_logits[k] * w1;
    d_f2 += d_logits[k] * w2;
  }
  encoder_.backward(params, c1, {d_f1.data(), static_cast<std::size_t>(f)}, grad);
  encoder_.backward(params, c2, {d_f2.data(), static_cast<std::size_t>(f)}, grad);
}

std::array<double, 4> NaiveNet::probabilities(std::span<const double> params,
                                              const FloatImage& img1,
                                              const FloatImage& img2) const {
  EncoderCache c1, c2;
  encoder_.forward(params, img1, c1);
  encoder_.forward(params, img2, c2);
  return softmax(logits(params, c1, c2));
}

std::array<double, 4> softmax(const std::array<double, 4>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::array<double, 4> p{};
  double sum = 0.0;
  for (int k = 0; k < 4; ++k) sum += (p[k] = std::exp(logits[k] - m));
  for (auto& v : p) v /= sum;
  return p;
}

std::vector<double> image_features(const ModelParams& params, const FloatImage& image) {
  Encoder enc(params.encoder);
  EncoderCache cache;
  enc.forward(params.values, image, cache);
  return {cache.features.data(), cache.features.data() + cache.features.size()};
}

}  // namespace progstate
