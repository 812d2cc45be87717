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

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "progstate/dataset.hpp"
#include "progstate/errors.hpp"
#include "progstate/synthgen.hpp"
#include "test_support.hpp"

namespace progstate {
namespace {

using testing::TempDir;

std::vector<int> iota_vec(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

TEST(SplitTest, TwentyPatientsGiveThreeTestAndFoldsOf44333) {
  const SplitPlan plan = split_patientwise(iota_vec(20), 5, 0.15, 1);
  EXPECT_EQ(plan.test_patients.size(), 3u);
  std::vector<std::size_t> sizes;
  for (const auto& f : plan.folds) sizes.push_back(f.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{4, 4, 3, 3, 3}));
}

TEST(SplitTest, PartsAreDisjointAndCoverAllPatients) {
  const SplitPlan plan = split_patientwise(iota_vec(40), 5, 0.15, 9);
  std::multiset<int> all(plan.test_patients.begin(), plan.test_patients.end());
  for (const auto& f : plan.folds) all.insert(f.begin(), f.end());
  EXPECT_EQ(all.size(), 40u);
  EXPECT_EQ(std::set<int>(all.begin(), all.end()).size(), 40u);
}

TEST(SplitTest, SameSeedSameSplitDifferentSeedDiffers) {
  const auto a = split_patientwise(iota_vec(40), 5, 0.15, 9);
  const auto b = split_patientwise(iota_vec(40), 5, 0.15, 9);
  const auto c = split_patientwise(iota_vec(40), 5, 0.15, 10);
  EXPECT_EQ(a.folds, b.folds);
  EXPECT_EQ(a.test_patients, b.test_patients);
  EXPECT_NE(a.folds, c.folds);
}

TEST(SplitTest, FoldSpecUsesOtherFoldsForTraining) {
  const auto plan = split_patientwise(iota_vec(20), 5, 0.15, 1);
  for (int i = 0; i < 5; ++i) {
    const auto spec = plan.fold(i);
    EXPECT_EQ(spec.val_patients, plan.folds[i]);
    EXPECT_EQ(spec.train_patients.size() + spec.val_patients.size(), 17u);
    for (int p : spec.val_patients) {
      EXPECT_FALSE(std::binary_search(spec.train_patients.begin(), spec.train_patients.end(), p));
    }
  }
  EXPECT_THROW(plan.fold(5), ConfigError);
}

TEST(SplitTest, RejectsTooFewPatientsAndBadArguments) {
  EXPECT_THROW(split_patientwise(iota_vec(4), 5, 0.15, 0), ConfigError);
  EXPECT_THROW(split_patientwise(iota_vec(20), 1, 0.15, 0), ConfigError);
  EXPECT_THROW(split_patientwise(iota_vec(20), 5, 1.0, 0), ConfigError);
}

TEST(SplitTest, JsonRoundTrip) {
  const auto plan = split_patientwise(iota_vec(20), 5, 0.15, 4);
  const nlohmann::json j = plan;
  const auto back = j.get<SplitPlan>();
  EXPECT_EQ(back.folds, plan.folds);
  EXPECT_EQ(back.test_patients, plan.test_patients);
  EXPECT_EQ(back.seed, 4u);
}

TEST(AugmentTest, IdentityParametersArePureResizes) {
  Rng rng(1);
  const FloatImage a = testing::random_image(32, 64, rng);
  const FloatImage b = testing::random_image(32, 64, rng);
  AugmentParams p{1.0, 1.0, 16, 32, 0.0};
  const auto [oa, ob] = augment_pair(a, b, p, rng);
  EXPECT_EQ(oa, resize_bilinear(a, 16, 32));
  EXPECT_EQ(ob, resize_bilinear(b, 16, 32));
}

TEST(AugmentTest, IdenticalInputsGiveIdenticalOutputs) {
  Rng rng(2);
  const FloatImage a = testing::random_image(32, 64, rng);
  const AugmentParams p;
  for (int i = 0; i < 50; ++i) {
    const auto [oa, ob] = augment_pair(a, a, p, rng);
    ASSERT_EQ(oa, ob);
  }
}

TEST(AugmentTest, SharedTransformOnDifferentImages) {
  // Pixelwise-linear images: the outputs must be related by the same linear map.
  Rng rng(3);
  const FloatImage a = testing::random_image(32, 64, rng);
  FloatImage b = a;
  for (auto& v : b.pixels) v = 0.5 * v + 0.25;
  const auto [oa, ob] = augment_pair(a, b, AugmentParams{}, rng);
  for (std::size_t i = 0; i < oa.pixels.size(); ++i) {
    ASSERT_NEAR(ob.pixels[i], 0.5 * oa.pixels[i] + 0.25, 1e-12);
  }
}

TEST(AugmentTest, CropAreasWithinScaleRange) {
  Rng rng(4);
  const AugmentParams p;
  for (int i = 0; i < 100; ++i) {
    const auto d = sample_augment(32, 64, p, rng);
    const double frac = d.rect.height * d.rect.width / (32.0 * 64.0);
    EXPECT_GE(frac, 0.2 - 1e-12);
    EXPECT_LE(frac, 1.0 + 1e-12);
    EXPECT_GE(d.rect.top, 0.0);
    EXPECT_GE(d.rect.left, 0.0);
    EXPECT_LE(d.rect.top + d.rect.height, 32.0 + 1e-9);
    EXPECT_LE(d.rect.left + d.rect.width, 64.0 + 1e-9);
    EXPECT_NEAR(d.rect.width / d.rect.height, 2.0, 1e-9);
  }
}

TEST(AugmentTest, RejectsMismatchedImagesAndBadParams) {
  Rng rng(5);
  EXPECT_THROW(augment_pair(FloatImage(4, 4), FloatImage(4, 5), AugmentParams{}, rng),
               FormatError);
  AugmentParams p;
  p.crop_scale_min = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = AugmentParams{};
  p.crop_scale_min = 0.9;
  p.crop_scale_max = 0.5;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(SamplerTest, SkewedCountsGiveUniformClassFrequencies) {
  std::vector<Progression> labels;
  labels.insert(labels.end(), 90, Progression::kBetter);
  labels.insert(labels.end(), 5, Progression::kWorse);
  labels.insert(labels.end(), 4, Progression::kStable);
  labels.insert(labels.end(), 1, Progression::kOther);
  const BalancedSampler sampler(labels);
  std::array<double, 4> expected{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    expected[index_of(labels[i])] += sampler.item_probability(i);
  }
  for (double e : expected) EXPECT_NEAR(e, 0.25, 1e-12);

  Rng rng(6);
  std::array<int, 4> counts{};
  const int n = 40000;
  for (auto i : sampler.draw(n, rng)) counts[index_of(labels[i])]++;
  for (int c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.25, 0.02);
}

TEST(SamplerTest, SingleClassIsUniformOverItems) {
  const std::vector<Progression> labels(8, Progression::kStable);
  const BalancedSampler sampler(labels);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    EXPECT_DOUBLE_EQ(sampler.item_probability(i), 1.0 / 8.0);
  }
  EXPECT_EQ(sampler.present_classes().size(), 1u);
}

TEST(SamplerTest, EmptyLabelsRejected) {
  EXPECT_THROW(BalancedSampler(std::vector<Progression>{}), ConfigError);
}

class ManifestErrorTest : public ::testing::Test {
 protected:
  void SetUp() override {
    manifest_ = write_dataset(gen_cohort(testing::tiny_cohort()), dir_.path());
    std::ifstream in(manifest_);
    for (std::string line; std::getline(in, line);) lines_.push_back(line);
  }
  void rewrite() {
    std::ofstream out(manifest_, std::ios::trunc);
    for (const auto& l : lines_) out << l << '\n';
  }
  std::string load_error() {
    try {
      load_dataset(manifest_);
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  }

  TempDir dir_;
  std::filesystem::path manifest_;
  std::vector<std::string> lines_;
};

TEST_F(ManifestErrorTest, LoadsCleanManifest) {
  const Dataset ds = load_dataset(manifest_);
  std::size_t total = 0;
  for (auto c : ds.label_histogram) total += c;
  EXPECT_EQ(total, ds.pairs.size());
  std::size_t indexed = 0;
  for (const auto& [patient, idx] : ds.patient_index) indexed += idx.size();
  EXPECT_EQ(indexed, ds.pairs.size());
}

TEST_F(ManifestErrorTest, DanglingImagePathIsNamed) {
  auto j = nlohmann::json::parse(lines_[3]);
  j["img2"] = "images/nowhere.pgm";
  lines_[3] = j.dump();
  rewrite();
  EXPECT_THROW(load_dataset(manifest_), IoError);
  const auto msg = load_error();
  EXPECT_NE(msg.find("nowhere.pgm"), std::string::npos);
  EXPECT_NE(msg.find("record 3"), std::string::npos);
}

TEST_F(ManifestErrorTest, MalformedLineNamesRecord) {
  lines_[5] = "{\"pair_id\": 5, ";
  rewrite();
  EXPECT_THROW(load_dataset(manifest_), FormatError);
  EXPECT_NE(load_error().find("record 5"), std::string::npos);
}

TEST_F(ManifestErrorTest, DimensionMismatchNamesRecord) {
  const auto j = nlohmann::json::parse(lines_[2]);
  write_pgm(dir_.path() / j["img1"].get<std::string>(), Image(20, 20, 1));
  EXPECT_THROW(load_dataset(manifest_), FormatError);
  EXPECT_NE(load_error().find("record"), std::string::npos);
}

TEST_F(ManifestErrorTest, DuplicatePairIdRejected) {
  auto j = nlohmann::json::parse(lines_[4]);
  j["pair_id"] = 0;
  lines_[4] = j.dump();
  rewrite();
  EXPECT_THROW(load_dataset(manifest_), FormatError);
}

TEST_F(ManifestErrorTest, MissingManifest) {
  EXPECT_THROW(load_dataset(dir_.path() / "absent.jsonl"), IoError);
}

TEST(DatasetTest, PairIndicesFollowPatients) {
  const Dataset ds = Dataset::from_cohort(gen_cohort(testing::tiny_cohort()));
  const std::vector<int> patients{1, 4};
  const auto idx = ds.pair_indices(patients);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  for (int i : idx) {
    EXPECT_TRUE(ds.pairs[i].patient_id == 1 || ds.pairs[i].patient_id == 4);
  }
  EXPECT_EQ(idx.size(), 2u * 3u * 4u);
  EXPECT_EQ(ds.patients().size(), 10u);
}

TEST(DatasetTest, CenterResizeKeepsMatchingSizes) {
  Rng rng(8);
  const FloatImage a = testing::random_image(16, 32, rng);
  EXPECT_EQ(center_resize(a, 16, 32), a);
  const FloatImage b = center_resize(a, 16, 16);
  EXPECT_EQ(b.height, 16);
  EXPECT_EQ(b.width, 16);
  EXPECT_DOUBLE_EQ(b.at(3, 0), a.at(3, 8));
}

}  // namespace
}  // namespace progstate
