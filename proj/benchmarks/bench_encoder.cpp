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

#include <benchmark/benchmark.h>

#include "progstate/encoder.hpp"
#include "progstate/model.hpp"
#include "progstate/rng.hpp"

namespace {

using namespace progstate;

EncoderConfig config_for(int width_multiplier) {
  EncoderConfig c;
  c.channels = {4 * width_multiplier, 8 * width_multiplier, 16 * width_multiplier};
  return c;
}

FloatImage random_image(int h, int w, Rng& rng) {
  FloatImage img(h, w);
  for (auto& v : img.pixels) v = rng.uniform();
  return img;
}

void BM_EncoderForward(benchmark::State& state) {
  Encoder enc(config_for(static_cast<int>(state.range(0))));
  Rng rng(1);
  std::vector<double> params(enc.param_count());
  enc.init(params, rng);
  FloatImage img = random_image(32, 64, rng);
  EncoderCache cache;
  for (auto _ : state) {
    enc.forward(params, img, cache);
    benchmark::DoNotOptimize(cache.features.data());
  }
  state.counters["params"] = static_cast<double>(enc.param_count());
}
BENCHMARK(BM_EncoderForward)->Arg(1)->Arg(2)->Arg(4);

void BM_EncoderForwardBackward(benchmark::State& state) {
  Encoder enc(config_for(static_cast<int>(state.range(0))));
  Rng rng(2);
  std::vector<double> params(enc.param_count());
  std::vector<double> grad(enc.param_count());
  enc.init(params, rng);
  FloatImage img = random_image(32, 64, rng);
  EncoderCache cache;
  std::vector<double> d_features(enc.feature_dim(), 0.1);
  for (auto _ : state) {
    enc.forward(params, img, cache);
    enc.backward(params, cache, d_features, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_EncoderForwardBackward)->Arg(1)->Arg(2)->Arg(4);

void BM_ForwardPair(benchmark::State& state) {
  SiameseNet net(EncoderConfig{});
  Rng rng(3);
  ModelParams params = net.init(rng);
  FloatImage a = random_image(32, 64, rng);
  FloatImage b = random_image(32, 64, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_pair(net, params, a, b).y_d);
  }
}
BENCHMARK(BM_ForwardPair);

}  // namespace

BENCHMARK_MAIN();
