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

#include "progstate/rng.hpp"

namespace progstate {

// Ranks starting at 1; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

// Monte-Carlo permutation p-value for |spearman(x, y)|, with the +1
// correction: (1 + #{|rho_perm| >= |rho_obs|}) / (1 + n_perm).
double spearman_permutation_pvalue(std::span<const double> x, std::span<const double> y,
                                   int n_perm, Rng& rng);

struct MannWhitney {
  double u = 0.0;        // U statistic of the first sample
  double z = 0.0;        // tie-corrected normal approximation
  double p_less = 1.0;   // one-sided p for "first sample tends to be smaller"
};

MannWhitney mann_whitney(std::span<const double> first, std::span<const double> second);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> x);

}  // namespace progstate
