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

#include <nlohmann/json.hpp>

namespace progstate {

struct AdamWParams {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

void to_json(nlohmann::json& j, const AdamWParams& p);
void from_json(const nlohmann::json& j, AdamWParams& p);

// Adam with decoupled weight decay: each step first shrinks the parameters by
// (1 - lr * weight_decay), then applies the bias-corrected Adam update.
// weight_decay = 0 gives plain Adam.
class AdamW {
 public:
  AdamW(std::size_t n, AdamWParams params);

  void step(std::span<double> params, std::span<const double> grads);

  const AdamWParams& params() const { return params_; }
  std::size_t steps() const { return t_; }

 private:
  AdamWParams params_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace progstate
