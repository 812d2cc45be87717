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

#include "progstate/adamw.hpp"

#include <cmath>

#include "progstate/errors.hpp"
#include "progstate/json_util.hpp"

namespace progstate {

void to_json(nlohmann::json& j, const AdamWParams& p) {
  j = nlohmann::json{{"lr", p.lr},
                     {"beta1", p.beta1},
                     {"beta2", p.beta2},
                     {"eps", p.eps},
                     {"weight_decay", p.weight_decay}};
}

void from_json(const nlohmann::json& j, AdamWParams& p) {
  constexpr std::string_view ctx = "optimizer";
  reject_unknown_keys(j, {"lr", "beta1", "beta2", "eps", "weight_decay"}, ctx);
  read_optional(j, "lr", p.lr, ctx);
  read_optional(j, "beta1", p.beta1, ctx);
  read_optional(j, "beta2", p.beta2, ctx);
  read_optional(j, "eps", p.eps, ctx);
  read_optional(j, "weight_decay", p.weight_decay, ctx);
}

AdamW::AdamW(std::size_t n, AdamWParams params) : params_(params), m_(n, 0.0), v_(n, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ConfigError("AdamW::step: size mismatch");
  }
  ++t_;
  const double b1 = params_.beta1;
  const double b2 = params_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double decay = 1.0 - params_.lr * params_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] = params[i] * decay - params_.lr * m_hat / (std::sqrt(v_hat) + params_.eps);
  }
}

}  // namespace progstate
