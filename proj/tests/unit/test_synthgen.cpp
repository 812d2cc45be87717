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
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "progstate/dataset.hpp"
#include "progstate/errors.hpp"
#include "progstate/synthgen.hpp"
#include "test_support.hpp"

namespace progstate {
namespace {

using testing::TempDir;
using testing::tiny_cohort;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(SynthgenTest, SameSeedGivesIdenticalCohorts) {
  const auto a = gen_cohort(tiny_cohort(7));
  const auto b = gen_cohort(tiny_cohort(7), 3);
  ASSERT_EQ(a.images.size(), b.images.size());
  ASSERT_EQ(a.pairs.size(), b.pairs.size());
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    EXPECT_EQ(a.images[i].image, b.images[i].image);
    EXPECT_EQ(a.images[i].state.severity, b.images[i].state.severity);
  }
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    EXPECT_EQ(a.pairs[i].label, b.pairs[i].label);
    EXPECT_EQ(a.pairs[i].img1, b.pairs[i].img1);
  }
}

TEST(SynthgenTest, WrittenDatasetIsByteIdentical) {
  TempDir d1, d2;
  write_dataset(gen_cohort(tiny_cohort(7)), d1.path());
  write_dataset(gen_cohort(tiny_cohort(7)), d2.path());
  EXPECT_EQ(read_file(d1 / "manifest.jsonl"), read_file(d2 / "manifest.jsonl"));
  EXPECT_EQ(read_file(d1 / "images/p003_v02_s01.pgm"), read_file(d2 / "images/p003_v02_s01.pgm"));
}

TEST(SynthgenTest, ZeroJitterSharesVisitSeverity) {
  auto cfg = tiny_cohort();
  cfg.scan_jitter = 0.0;
  const auto cohort = gen_cohort(cfg);
  std::map<std::pair<int, int>, double> visit_severity;
  for (const auto& rec : cohort.images) {
    const auto key = std::make_pair(rec.state.patient_id, rec.state.visit_index);
    const auto [it, inserted] = visit_severity.emplace(key, rec.state.severity);
    EXPECT_EQ(rec.state.severity, it->second);
  }
  EXPECT_EQ(visit_severity.size(),
            static_cast<std::size_t>(cfg.n_patients * cfg.visits_per_patient));
}

TEST(SynthgenTest, PairCountMatchesEnumeration) {
  CohortConfig cfg;
  cfg.n_patients = 68;
  cfg.visits_per_patient = 10;
  cfg.scans_per_volume = 2;
  cfg.image_height = 16;
  cfg.image_width = 16;
  const auto cohort = gen_cohort(cfg);
  EXPECT_EQ(cohort.pairs.size(), 68u * 9u * 2u);
  EXPECT_EQ(expected_pair_count(cfg), 68u * 9u * 2u);
}

TEST(SynthgenTest, PairsAreConsecutiveVisitsOfOneScan) {
  const auto cohort = gen_cohort(tiny_cohort());
  for (const auto& p : cohort.pairs) {
    const auto& a = cohort.images[p.img1].state;
    const auto& b = cohort.images[p.img2].state;
    EXPECT_EQ(a.patient_id, p.patient_id);
    EXPECT_EQ(b.patient_id, p.patient_id);
    EXPECT_EQ(a.scan_index, b.scan_index);
    EXPECT_EQ(a.visit_index + 1, b.visit_index);
  }
}

TEST(SynthgenTest, SeverityZeroHasNoBlobs) {
  Rng rng(1);
  EXPECT_TRUE(layout_blobs(0.0, RenderParams{}, rng).empty());
  RenderParams quiet{32, 64, 0.0};
  const Image img = render_bscan({0, 0, 0, 0.0}, quiet, rng);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      ASSERT_EQ(img.at(y, x), std::lround(background_intensity(y, img.height)));
    }
  }
}

TEST(SynthgenTest, BlobAreaIsMonotoneInSeverity) {
  const RenderParams params;
  double previous = -1.0;
  for (int i = 0; i <= 40; ++i) {
    const double s = 0.1 * i;
    Rng rng(99);
    double area = 0.0;
    for (const auto& b : layout_blobs(s, params, rng)) area += b.area();
    EXPECT_GE(area, previous);
    EXPECT_NEAR(area, total_blob_area(s, params.height, params.width), 1e-9);
    previous = area;
  }
}

TEST(SynthgenTest, MeanIntensityIncreasesOnSeverityGrid) {
  const RenderParams params;
  double previous = -1.0;
  for (int i = 0; i < 10; ++i) {
    const double s = 4.0 * i / 9.0;
    double mean = 0.0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
      Rng rng(derive_seed(5, static_cast<std::uint64_t>(i * 100 + r)));
      mean += mean_intensity(render_bscan({0, 0, 0, s}, params, rng));
    }
    mean /= reps;
    EXPECT_GT(mean, previous) << "severity " << s;
    previous = mean;
  }
}

TEST(LabelPairTest, GeometricCases) {
  CohortConfig cfg;
  cfg.flip_rate = 0.0;
  cfg.other_rate = 0.0;
  Rng rng(1);
  EXPECT_EQ(label_pair(1.3, 1.3, cfg, rng).label, Progression::kStable);
  EXPECT_EQ(label_pair(2.0, 2.0 - 2.0 * cfg.tau, cfg, rng).label, Progression::kBetter);
  EXPECT_EQ(label_pair(2.0, 2.0 + 2.0 * cfg.tau, cfg, rng).label, Progression::kWorse);
}

TEST(LabelPairTest, AntisymmetricUnderSwap) {
  CohortConfig cfg;
  cfg.flip_rate = 0.0;
  cfg.other_rate = 0.0;
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double s1 = rng.uniform(0, 4), s2 = rng.uniform(0, 4);
    const auto forward = label_pair(s1, s2, cfg, rng).label;
    const auto backward = label_pair(s2, s1, cfg, rng).label;
    EXPECT_EQ(backward, reversed(forward));
  }
}

TEST(LabelPairTest, ForcedFlipLeavesStable) {
  CohortConfig cfg;
  cfg.flip_rate = 1.0;
  cfg.other_rate = 0.0;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto lab = label_pair(1.0, 1.0, cfg, rng);
    EXPECT_EQ(lab.clean_label, Progression::kStable);
    EXPECT_TRUE(lab.label == Progression::kBetter || lab.label == Progression::kWorse);
  }
}

TEST(LabelPairTest, CorruptionAndFlipRatesWithinThreeStandardErrors) {
  CohortConfig cfg;
  cfg.flip_rate = 0.2;
  cfg.other_rate = 0.05;
  Rng rng(4);
  const int n = 10000;
  int other = 0, flipped = 0, clean = 0;
  for (int i = 0; i < n; ++i) {
    const auto lab = label_pair(rng.uniform(0, 4), rng.uniform(0, 4), cfg, rng);
    if (lab.label == Progression::kOther) {
      ++other;
      EXPECT_GE(lab.corrupted_image, 0);
      continue;
    }
    ++clean;
    flipped += lab.label != lab.clean_label;
  }
  const double rho = static_cast<double>(other) / n;
  EXPECT_NEAR(rho, 0.05, 3.0 * std::sqrt(0.05 * 0.95 / n));
  const double eta = static_cast<double>(flipped) / clean;
  EXPECT_NEAR(eta, 0.2, 3.0 * std::sqrt(0.2 * 0.8 / clean));
}

TEST(SynthgenTest, OtherIffCorruptedImage) {
  auto cfg = tiny_cohort();
  cfg.other_rate = 0.3;
  const auto cohort = gen_cohort(cfg);
  int others = 0;
  for (const auto& p : cohort.pairs) {
    const bool any = cohort.images[p.img1].corrupted || cohort.images[p.img2].corrupted;
    EXPECT_EQ(any, p.label == Progression::kOther);
    EXPECT_EQ(any, p.corrupted[0] || p.corrupted[1]);
    if (!any) EXPECT_NE(p.clean_label, Progression::kOther);
    others += any;
  }
  EXPECT_GT(others, 0);
}

TEST(SynthgenTest, ManifestRoundTripPreservesFields) {
  TempDir dir;
  auto cfg = tiny_cohort();
  cfg.other_rate = 0.2;
  cfg.flip_rate = 0.3;
  const auto cohort = gen_cohort(cfg);
  const auto manifest = write_dataset(cohort, dir.path());
  const Dataset loaded = load_dataset(manifest);
  const Dataset direct = Dataset::from_cohort(cohort);
  ASSERT_EQ(loaded.pairs.size(), cohort.pairs.size());
  std::set<int> ids;
  for (std::size_t i = 0; i < loaded.pairs.size(); ++i) {
    const auto& a = loaded.pairs[i];
    const auto& b = cohort.pairs[i];
    EXPECT_EQ(a.pair_id, b.pair_id);
    EXPECT_EQ(a.label, b.label);
    EXPECT_EQ(a.clean_label, b.clean_label);
    EXPECT_EQ(a.patient_id, b.patient_id);
    EXPECT_EQ(a.visit_from, b.visit_from);
    EXPECT_EQ(a.visit_to, b.visit_to);
    EXPECT_EQ(a.scan_index, b.scan_index);
    EXPECT_EQ(a.corrupted, b.corrupted);
    EXPECT_EQ(loaded.images.at(a.img1), cohort.images[b.img1].image);
    EXPECT_EQ(loaded.images.at(a.img2), cohort.images[b.img2].image);
    ASSERT_TRUE(a.severities.has_value());
    EXPECT_EQ(a.severities->first, cohort.images[b.img1].state.severity);
    ids.insert(a.pair_id);
  }
  EXPECT_EQ(ids.size(), loaded.pairs.size());
  EXPECT_EQ(*ids.begin(), 0);
  EXPECT_EQ(*ids.rbegin(), static_cast<int>(loaded.pairs.size()) - 1);
  EXPECT_EQ(loaded.label_histogram, direct.label_histogram);
}

TEST(SynthgenTest, ConfigValidationAndJson) {
  CohortConfig cfg;
  cfg.tau = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = CohortConfig{};
  cfg.image_height = 8;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = CohortConfig{};
  cfg.flip_rate = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);

  CohortConfig c2;
  c2.seed = 123;
  c2.flip_rate = 0.25;
  const nlohmann::json j = c2;
  const auto back = j.get<CohortConfig>();
  EXPECT_EQ(back.seed, 123u);
  EXPECT_EQ(back.flip_rate, 0.25);
  EXPECT_THROW(nlohmann::json({{"bogus", 1}}).get<CohortConfig>(), ConfigError);
}

TEST(ActivitySetTest, LabelsFollowCutoffAndAreDeterministic) {
  ActivityConfig cfg;
  cfg.n_images = 200;
  const auto a = gen_activity_set(cfg);
  const auto b = gen_activity_set(cfg);
  ASSERT_EQ(a.images.size(), 200u);
  int active = 0;
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    EXPECT_EQ(a.labels[i], a.severities[i] > cfg.cutoff ? 1 : 0);
    EXPECT_EQ(a.images[i], b.images[i]);
    active += a.labels[i];
  }
  EXPECT_GT(active, 50);
  EXPECT_LT(active, 150);
}

}  // namespace
}  // namespace progstate
