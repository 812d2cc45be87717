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

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "progstate/image.hpp"
#include "progstate/rng.hpp"

namespace progstate {

enum class Activation { kRelu, kSoftplus };

// Convolutional encoder: `channels.size()` blocks of 3x3 same-padded
// convolution + activation, with 2x2 average pooling between blocks and global
// average pooling after the last one, followed by a dense layer with
// activation producing a `feature_dim`-vector.
struct EncoderConfig {
  int input_height = 32;
  int input_width = 64;
  std::vector<int> channels{8, 16, 32};
  int feature_dim = 64;
  Activation activation = Activation::kRelu;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Activations retained by a forward pass for the matching backward pass.
struct EncoderCache {
  std::vector<RowMatrix> cols;  // im2col input per block
  std::vector<RowMatrix> pre;   // pre-activation per block, channels x pixels
  Eigen::VectorXd pooled;       // global average of the last block
  Eigen::VectorXd fc_pre;
  Eigen::VectorXd features;
};

// Parameter layout inside a flat vector starting at offset 0:
// per block [weights (out x in*9, row-major), bias (out)], then
// [dense weights (feature_dim x last_channels, row-major), dense bias].
class Encoder {
 public:
  explicit Encoder(EncoderConfig config);

  const EncoderConfig& config() const { return config_; }
  std::size_t param_count() const { return param_count_; }
  int feature_dim() const { return config_.feature_dim; }

  // He-normal weights, zero biases.
  void init(std::span<double> params, Rng& rng) const;

  // `params` must hold at least param_count() values. Throws FormatError on
  // an input size different from the configured one.
  void forward(std::span<const double> params, const FloatImage& image,
               EncoderCache& cache) const;

  // Accumulates d(loss)/d(params) into grad given d(loss)/d(features).
  void backward(std::span<const double> params, const EncoderCache& cache,
                std::span<const double> d_features, std::span<double> grad) const;

 private:
  struct Block {
    int in_channels, out_channels, height, width;
    std::size_t weight_offset, bias_offset;
  };

  EncoderConfig config_;
  std::vector<Block> blocks_;
  std::size_t fc_weight_offset_ = 0;
  std::size_t fc_bias_offset_ = 0;
  std::size_t param_count_ = 0;
};

}  // namespace progstate
