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

#include "progstate/encoder.hpp"

#include <cmath>
#include <string>

#include "progstate/errors.hpp"
#include "progstate/json_util.hpp"

namespace progstate {
namespace {

using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

template <typename Derived>
void activate(Eigen::MatrixBase<Derived>& x, Activation act) {
  if (act == Activation::kRelu) {
    x = x.cwiseMax(0.0);
  } else {
    x = x.unaryExpr([](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
  }
}

// Multiplies `grad` in place by the activation derivative evaluated at `pre`.
template <typename G, typename P>
void activation_backward(Eigen::MatrixBase<G>& grad, const Eigen::MatrixBase<P>& pre,
                         Activation act) {
  if (act == Activation::kRelu) {
    grad = (pre.array() > 0.0).select(grad, 0.0);
  } else {
    grad = grad.cwiseProduct(
        pre.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }));
  }
}

// cols(c*9 + ky*3 + kx, y*W + x) = in(c, (y+ky-1)*W + (x+kx-1)), zero outside.
void im2col(const RowMatrix& in, int h, int w, RowMatrix& cols) {
  const int c_in = static_cast<int>(in.rows());
  cols.resize(static_cast<Eigen::Index>(c_in) * 9, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < c_in; ++c) {
    const double* src = in.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = cols.row(c * 9 + ky * 3 + kx).data();
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          double* out = dst + static_cast<std::ptrdiff_t>(y) * w;
          if (sy < 0 || sy >= h) {
            std::fill_n(out, w, 0.0);
            continue;
          }
          const double* row = src + static_cast<std::ptrdiff_t>(sy) * w;
          const int x_begin = std::max(0, -dx);
          const int x_end = std::min(w, w - dx);
          for (int x = 0; x < x_begin; ++x) out[x] = 0.0;
          for (int x = x_begin; x < x_end; ++x) out[x] = row[x + dx];
          for (int x = x_end; x < w; ++x) out[x] = 0.0;
        }
      }
    }
  }
}

// Adjoint of im2col.
void col2im(const RowMatrix& cols, int c_in, int h, int w, RowMatrix& out) {
  out.setZero(c_in, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < c_in; ++c) {
    double* dst = out.row(c).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = cols.row(c * 9 + ky * 3 + kx).data();
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const double* in = src + static_cast<std::ptrdiff_t>(y) * w;
          double* row = dst + static_cast<std::ptrdiff_t>(sy) * w;
          const int x_begin = std::max(0, -dx);
          const int x_end = std::min(w, w - dx);
          for (int x = x_begin; x < x_end; ++x) row[x + dx] += in[x];
        }
      }
    }
  }
}

void avg_pool2(const RowMatrix& in, int h, int w, RowMatrix& out) {
  const int oh = h / 2, ow = w / 2;
  out.resize(in.rows(), static_cast<Eigen::Index>(oh) * ow);
  for (Eigen::Index c = 0; c < in.rows(); ++c) {
    const double* src = in.row(c).data();
    double* dst = out.row(c).data();
    for (int y = 0; y < oh; ++y) {
      const double* r0 = src + static_cast<std::ptrdiff_t>(2 * y) * w;
      const double* r1 = r0 + w;
      for (int x = 0; x < ow; ++x) {
        dst[y * ow + x] = 0.25 * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
      }
    }
  }
}

void avg_unpool2(const RowMatrix& d_out, int h, int w, RowMatrix& d_in) {
  const int oh = h / 2, ow = w / 2;
  d_in.resize(d_out.rows(), static_cast<Eigen::Index>(h) * w);
  for (Eigen::Index c = 0; c < d_out.rows(); ++c) {
    const double* src = d_out.row(c).data();
    double* dst = d_in.row(c).data();
    for (int y = 0; y < oh; ++y) {
      double* r0 = dst + static_cast<std::ptrdiff_t>(2 * y) * w;
      double* r1 = r0 + w;
      for (int x = 0; x < ow; ++x) {
        const double g = 0.25 * src[y * ow + x];
        r0[2 * x] = r0[2 * x + 1] = r1[2 * x] = r1[2 * x + 1] = g;
      }
    }
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (channels.empty()) throw ConfigError("encoder: need at least one conv block");
  for (int c : channels) {
    if (c < 1) throw ConfigError("encoder: channel counts must be positive");
  }
  if (feature_dim < 1) throw ConfigError("encoder: feature_dim must be positive");
  const int div = 1 << (channels.size() - 1);
  if (input_height < div || input_width < div || input_height % div != 0 ||
      input_width % div != 0) {
    throw ConfigError("encoder: input size must be divisible by 2^(blocks-1) = " +
                      std::to_string(div));
  }
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = nlohmann::json{{"input_height", c.input_height},
                     {"input_width", c.input_width},
                     {"channels", c.channels},
                     {"feature_dim", c.feature_dim},
                     {"activation", c.activation == Activation::kRelu ? "relu" : "softplus"}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  constexpr std::string_view ctx = "encoder config";
  reject_unknown_keys(j, {"input_height", "input_width", "channels", "feature_dim", "activation"},
                      ctx);
  read_optional(j, "input_height", c.input_height, ctx);
  read_optional(j, "input_width", c.input_width, ctx);
  read_optional(j, "channels", c.channels, ctx);
  read_optional(j, "feature_dim", c.feature_dim, ctx);
  if (j.contains("activation")) {
    std::string a;
    read_optional(j, "activation", a, ctx);
    if (a == "relu") {
      c.activation = Activation::kRelu;
    } else if (a == "softplus") {
      c.activation = Activation::kSoftplus;
    } else {
      throw ConfigError("encoder config: activation must be 'relu' or 'softplus'");
    }
  }
}

Encoder::Encoder(EncoderConfig config) : config_(std::move(config)) {
  config_.validate();
  std::size_t offset = 0;
  int in_c = 1, h = config_.input_height, w = config_.input_width;
  for (std::size_t i = 0; i < config_.channels.size(); ++i) {
    Block b{in_c, config_.channels[i], h, w, 0, 0};
    b.weight_offset = offset;
    offset += static_cast<std::size_t>(b.out_channels) * b.in_channels * 9;
    b.bias_offset = offset;
    offset += b.out_channels;
    blocks_.push_back(b);
    in_c = b.out_channels;
    if (i + 1 < config_.channels.size()) {
      h /= 2;
      w /= 2;
    }
  }
  fc_weight_offset_ = offset;
  offset += static_cast<std::size_t>(config_.feature_dim) * in_c;
  fc_bias_offset_ = offset;
  offset += config_.feature_dim;
  param_count_ = offset;
}

void Encoder::init(std::span<double> params, Rng& rng) const {
  for (const Block& b : blocks_) {
    const double sd = std::sqrt(2.0 / (b.in_channels * 9));
    const std::size_t n = static_cast<std::size_t>(b.out_channels) * b.in_channels * 9;
    for (std::size_t i = 0; i < n; ++i) params[b.weight_offset + i] = sd * rng.normal();
    for (int i = 0; i < b.out_channels; ++i) params[b.bias_offset + i] = 0.0;
  }
  const int last = blocks_.back().out_channels;
  const double sd = std::sqrt(2.0 / last);
  for (std::size_t i = 0; i < static_cast<std::size_t>(config_.feature_dim) * last; ++i) {
    params[fc_weight_offset_ + i] = sd * rng.normal();
  }
  for (int i = 0; i < config_.feature_dim; ++i) params[fc_bias_offset_ + i] = 0.0;
}

void Encoder::forward(std::span<const double> params, const FloatImage& image,
                      EncoderCache& cache) const {
  if (image.height != config_.input_height || image.width != config_.input_width) {
    throw FormatError("encoder input is " + std::to_string(image.height) + "x" +
                      std::to_string(image.width) + ", configured for " +
                      std::to_string(config_.input_height) + "x" +
                      std::to_string(config_.input_width));
  }
  const std::size_t n_blocks = blocks_.size();
  cache.cols.resize(n_blocks);
  cache.pre.resize(n_blocks);

  RowMatrix x = ConstMap(image.pixels.data(), 1, static_cast<Eigen::Index>(image.pixels.size()));
  for (std::size_t l = 0; l < n_blocks; ++l) {
    const Block& b = blocks_[l];
    im2col(x, b.height, b.width, cache.cols[l]);
    ConstMap weight(params.data() + b.weight_offset, b.out_channels,
                    static_cast<Eigen::Index>(b.in_channels) * 9);
    ConstVecMap bias(params.data() + b.bias_offset, b.out_channels);
    RowMatrix& pre = cache.pre[l];
    pre.noalias() = weight * cache.cols[l];
    pre.colwise() += bias;
    RowMatrix act = pre;
    activate(act, config_.activation);
    if (l + 1 < n_blocks) {
      avg_pool2(act, b.height, b.width, x);
    } else {
      cache.pooled = act.rowwise().mean();
    }
  }
  const int last = blocks_.back().out_channels;
  ConstMap fc_w(params.data() + fc_weight_offset_, config_.feature_dim, last);
  ConstVecMap fc_b(params.data() + fc_bias_offset_, config_.feature_dim);
  cache.fc_pre.noalias() = fc_w * cache.pooled;
  cache.fc_pre += fc_b;
  cache.features = cache.fc_pre;
  activate(cache.features, config_.activation);
}

void Encoder::backward(std::span<const double> params, const EncoderCache& cache,
                       std::span<const double> d_features, std::span<double> grad) const {
  const int last = blocks_.back().out_channels;
  Eigen::VectorXd d_fc = ConstVecMap(d_features.data(), config_.feature_dim);
  activation_backward(d_fc, cache.fc_pre, config_.activation);
  Map(grad.data() + fc_weight_offset_, config_.feature_dim, last).noalias() +=
      d_fc * cache.pooled.transpose();
  VecMap(grad.data() + fc_bias_offset_, config_.feature_dim) += d_fc;
  ConstMap fc_w(params.data() + fc_weight_offset_, config_.feature_dim, last);
  Eigen::VectorXd d_pooled = fc_w.transpose() * d_fc;

  // d(block output after activation), channels x pixels at block resolution.
  const Block& lb = blocks_.back();
  RowMatrix d_act(lb.out_channels, static_cast<Eigen::Index>(lb.height) * lb.width);
  d_act.colwise() = d_pooled / static_cast<double>(d_act.cols());

  RowMatrix d_cols, d_in;
  for (std::size_t l = blocks_.size(); l-- > 0;) {
    const Block& b = blocks_[l];
    RowMatrix& d_pre = d_act;
    activation_backward(d_pre, cache.pre[l], config_.activation);
    Map(grad.data() + b.weight_offset, b.out_channels,
        static_cast<Eigen::Index>(b.in_channels) * 9)
        .noalias() += d_pre * cache.cols[l].transpose();
    VecMap(grad.data() + b.bias_offset, b.out_channels) += d_pre.rowwise().sum();
    if (l == 0) break;
    ConstMap weight(params.data() + b.weight_offset, b.out_channels,
                    static_cast<Eigen::Index>(b.in_channels) * 9);
    d_cols.noalias() = weight.transpose() * d_pre;
    col2im(d_cols, b.in_channels, b.height, b.width, d_in);
    const Block& prev = blocks_[l - 1];
    avg_unpool2(d_in, prev.height, prev.width, d_act);
  }
}

}  // namespace progstate
