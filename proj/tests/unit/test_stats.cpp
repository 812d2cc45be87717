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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "progstate/errors.hpp"
#include "progstate/stats.hpp"

namespace progstate {
namespace {

TEST(RanksTest, TiesShareAverageRank) {
  const std::vector<double> x{3.0, 1.0, 3.0, 2.0, 3.0};
  EXPECT_EQ(average_ranks(x), (std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0}));
}

TEST(CorrelationTest, PearsonAndSpearman) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10};
  const std::vector<double> cubic{1, 8, 27, 64, 125};
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-15);
  EXPECT_LT(pearson(x, cubic), 1.0);
  EXPECT_NEAR(spearman(x, cubic), 1.0, 1e-15);
  const std::vector<double> rev{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman(x, rev), -1.0, 1e-15);
  // Hand computation: d = (0, 1, -1), 1 - 6 * 2 / (3 * 8) = 0.5.
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 0.5, 1e-15);
}

TEST(PermutationTest, StrongSignalIsSignificantAndNoiseIsNot) {
  Rng rng(1);
  std::vector<double> x(200), y(200), noise(200);
  for (int i = 0; i < 200; ++i) {
    x[i] = rng.normal();
    y[i] = x[i] + 0.3 * rng.normal();
    noise[i] = rng.normal();
  }
  EXPECT_NEAR(spearman_permutation_pvalue(x, y, 999, rng), 1.0 / 1000.0, 1e-15);
  EXPECT_GT(spearman_permutation_pvalue(x, noise, 999, rng), 0.01);
}

TEST(MannWhitneyTest, SeparatedSamples) {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  const MannWhitney r = mann_whitney(a, b);
  EXPECT_EQ(r.u, 0.0);
  // z = (0 - 4.5) / sqrt(9 * 7 / 12)
  EXPECT_NEAR(r.z, -4.5 / std::sqrt(63.0 / 12.0), 1e-12);
  EXPECT_NEAR(r.p_less, 0.5 * std::erfc(4.5 / std::sqrt(63.0 / 12.0) / std::sqrt(2.0)), 1e-12);
  EXPECT_GT(mann_whitney(b, a).p_less, 0.9);
  EXPECT_THROW(mann_whitney(a, std::vector<double>{}), ConfigError);
}

TEST(MannWhitneyTest, AllTiedGivesHalf) {
  const std::vector<double> a{1, 1}, b{1, 1, 1};
  EXPECT_EQ(mann_whitney(a, b).p_less, 0.5);
}

TEST(MeanStdTest, PopulationStd) {
  const std::vector<double> x{2, 4, 4, 4, 5, 5, 7, 9};
  const MeanStd m = mean_std(x);
  EXPECT_DOUBLE_EQ(m.mean, 5.0);
  EXPECT_DOUBLE_EQ(m.std, 2.0);
}

}  // namespace
}  // namespace progstate
