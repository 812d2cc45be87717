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
#include <set>

#include "progstate/dataset.hpp"
#include "progstate/errors.hpp"
#include "progstate/synthgen.hpp"
#include "progstate/train.hpp"
#include "test_support.hpp"

namespace progstate {
namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.encoder.input_height = 16;
  c.encoder.input_width = 32;
  c.encoder.channels = {4, 4};
  c.encoder.feature_dim = 8;
  c.augmentation.out_height = 16;
  c.augmentation.out_width = 32;
  c.optimizer.lr = 1e-3;
  c.epochs = 3;
  c.batch_size = 16;
  c.seed = 5;
  return c;
}

class TrainTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    CohortConfig cohort = testing::tiny_cohort(4);
    cohort.flip_rate = 0.2;
    dataset_ = new Dataset(Dataset::from_cohort(gen_cohort(cohort)));
    plan_ = new SplitPlan(split_patientwise(*dataset_, 4, 0.15, 1));
  }
  static void TearDownTestSuite() {
    delete dataset_;
    delete plan_;
  }
  static Dataset* dataset_;
  static SplitPlan* plan_;
};

Dataset* TrainTest::dataset_ = nullptr;
SplitPlan* TrainTest::plan_ = nullptr;

bool all_zero(const AlphaTable& a) {
  return std::all_of(a.values().begin(), a.values().end(), [](double v) { return v == 0.0; });
}

TEST_F(TrainTest, NoiseEstimationOffKeepsAlphaZero) {
  TrainConfig c = small_config();
  c.lambda = 3.0;
  const FoldResult r = train_fold(*dataset_, plan_->fold(0), c);
  EXPECT_TRUE(all_zero(r.best.alpha));
  EXPECT_TRUE(all_zero(r.last.alpha));
  for (const auto& e : r.history) EXPECT_EQ(e.train_reg, 0.0);
}

TEST_F(TrainTest, NoiseEstimationLearnsSlopes) {
  TrainConfig c = small_config();
  c.noise_estimation = true;
  const FoldResult r = train_fold(*dataset_, plan_->fold(0), c);
  EXPECT_FALSE(all_zero(r.last.alpha));
  EXPECT_GT(r.history.back().train_reg, 0.0);
}

TEST_F(TrainTest, SameSeedSameHistoryAndParameters) {
  TrainConfig c = small_config();
  c.noise_estimation = true;
  const FoldResult a = train_fold(*dataset_, plan_->fold(1), c);
  const FoldResult b = train_fold(*dataset_, plan_->fold(1), c);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.last, b.last);
  c.seed = 6;
  const FoldResult d = train_fold(*dataset_, plan_->fold(1), c);
  EXPECT_NE(a.history, d.history);
}

TEST_F(TrainTest, ThreadCountDoesNotChangeResults) {
  TrainConfig c = small_config();
  c.noise_estimation = true;
  c.augment = true;
  c.epochs = 2;
  const FoldResult a = train_fold(*dataset_, plan_->fold(2), c);
  c.threads = 3;
  const FoldResult b = train_fold(*dataset_, plan_->fold(2), c);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.last, b.last);
}

TEST_F(TrainTest, BestCheckpointHasMinimalValidationLoss) {
  TrainConfig c = small_config();
  c.epochs = 5;
  int calls = 0;
  const FoldResult r = train_fold(*dataset_, plan_->fold(0), c, [&](const EpochRecord&) { ++calls; });
  EXPECT_EQ(calls, 5);
  ASSERT_EQ(r.history.size(), 5u);
  for (const auto& e : r.history) EXPECT_LE(r.best.val_loss, e.val_loss);
  EXPECT_EQ(r.history[r.best.epoch - 1].val_loss, r.best.val_loss);
  EXPECT_EQ(r.last.epoch, 5);
  // The stored loss is the loss of the stored parameters.
  const auto val = dataset_->pair_indices(plan_->fold(0).val_patients);
  EXPECT_NEAR(validation_loss(r.best.model, *dataset_, val)[0], r.best.val_loss, 1e-12);
}

TEST_F(TrainTest, DivergenceIsNumericalError) {
  TrainConfig c = small_config();
  c.optimizer.lr = 1e300;
  EXPECT_THROW(train_fold(*dataset_, plan_->fold(0), c), NumericalError);
}

TEST_F(TrainTest, NaiveModelTrains) {
  TrainConfig c = small_config();
  c.model = ModelKind::kNaive;
  const FoldResult r = train_fold(*dataset_, plan_->fold(0), c);
  EXPECT_EQ(r.best.model.kind, ModelKind::kNaive);
  EXPECT_TRUE(all_zero(r.best.alpha));
  for (const auto& e : r.history) EXPECT_EQ(e.train_bce_o, 0.0);
  const FoldReport rep = evaluate_fold(*dataset_, r);
  EXPECT_GE(rep.validation.balanced_accuracy, 0.0);
}

TEST_F(TrainTest, CrossValidationUsesDisjointValidationPatients) {
  TrainConfig c = small_config();
  c.epochs = 1;
  const CrossValidation cv = cross_validate(*dataset_, *plan_, c, 2);
  ASSERT_EQ(cv.folds.size(), 4u);
  ASSERT_EQ(cv.reports.size(), 4u);
  std::set<int> seen;
  for (const auto& f : cv.folds) {
    for (int p : f.spec.val_patients) EXPECT_TRUE(seen.insert(p).second);
    for (int p : f.spec.test_patients) EXPECT_EQ(std::count(f.spec.train_patients.begin(),
                                                            f.spec.train_patients.end(), p), 0);
  }
  // Parallel folds give the same result as sequential ones.
  const CrossValidation seq = cross_validate(*dataset_, *plan_, c, 1);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(seq.folds[i].history, cv.folds[i].history);
}

TEST(TrainConfigTest, JsonRoundTripAndValidation) {
  TrainConfig c = small_config();
  c.alpha_lr.reset();
  c.noise_estimation = true;
  const nlohmann::json j = c;
  const TrainConfig back = j.get<TrainConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(back.effective_alpha_lr(), c.optimizer.lr);

  nlohmann::json bad = j;
  bad["learning_rate"] = 1.0;
  EXPECT_THROW(bad.get<TrainConfig>(), ConfigError);

  TrainConfig v = small_config();
  v.epochs = 0;
  EXPECT_THROW(v.validate(), ConfigError);
  v = small_config();
  v.lambda = -1.0;
  EXPECT_THROW(v.validate(), ConfigError);
  v = small_config();
  v.augmentation.out_width = 64;
  v.validate();  // unused while augmentation is off
  v.augment = true;
  EXPECT_THROW(v.validate(), ConfigError);
}

TEST(HistoryCsvTest, HeaderAndRows) {
  std::vector<EpochRecord> h(2);
  h[0].epoch = 1;
  h[1].epoch = 2;
  const std::string csv = history_csv(h);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "epoch,train_loss,train_bce_d,train_bce_o,train_reg,val_loss,val_bce_d,val_bce_o");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

}  // namespace
}  // namespace progstate
