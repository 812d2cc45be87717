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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "progstate/image.hpp"
#include "progstate/labels.hpp"
#include "progstate/rng.hpp"

namespace progstate {

struct SyntheticCohort;

// Raster store shared by all pairs. Images are addressed by index; rasters
// are read from disk on preload() unless the store was built in memory.
class ImageStore {
 public:
  ImageStore() = default;
  explicit ImageStore(std::vector<Image> images);
  ImageStore(std::vector<std::filesystem::path> paths, int height, int width);

  std::size_t size() const { return paths_.empty() ? images_.size() : paths_.size(); }
  int height() const { return height_; }
  int width() const { return width_; }

  bool loaded() const { return images_.size() == size(); }
  // Reads every raster, zero-padding to the store's (height, width).
  void preload();
  // Requires loaded().
  const Image& at(std::size_t i) const;
  const std::filesystem::path& path(std::size_t i) const { return paths_.at(i); }
  bool has_paths() const { return !paths_.empty(); }

 private:
  std::vector<std::filesystem::path> paths_;
  std::vector<Image> images_;
  int height_ = 0;
  int width_ = 0;
};

struct PairSample {
  int pair_id = 0;
  int img1 = 0;
  int img2 = 0;
  Progression label = Progression::kStable;
  Progression clean_label = Progression::kStable;
  int patient_id = 0;
  int visit_from = 0;
  int visit_to = 0;
  int scan_index = 0;
  std::array<bool, 2> corrupted{false, false};
  // Latent severities when the source provides them (synthetic cohorts).
  std::optional<std::pair<double, double>> severities;
};

struct Dataset {
  ImageStore images;
  std::vector<PairSample> pairs;
  std::map<int, std::vector<int>> patient_index;  // patient -> indices into pairs
  std::array<std::size_t, kNumClasses> label_histogram{};

  static Dataset from_cohort(const SyntheticCohort& cohort);

  std::vector<int> patients() const;
  // Indices into `pairs` for the given patients, ascending.
  std::vector<int> pair_indices(std::span<const int> patient_ids) const;
  int max_pair_id() const;
};

// Reads a JSONL manifest; image paths are relative to the manifest's
// directory. Validates every record and every referenced image header, then
// loads all rasters. Errors name the 0-based record index or the path.
Dataset load_dataset(const std::filesystem::path& manifest);

struct FoldSpec {
  int fold = 0;
  std::vector<int> train_patients;
  std::vector<int> val_patients;
  std::vector<int> test_patients;
};

struct SplitPlan {
  std::uint64_t seed = 0;
  double holdout_frac = 0.15;
  std::vector<int> test_patients;
  std::vector<std::vector<int>> folds;

  int n_folds() const { return static_cast<int>(folds.size()); }
  FoldSpec fold(int i) const;
};

void to_json(nlohmann::json& j, const SplitPlan& plan);
void from_json(const nlohmann::json& j, SplitPlan& plan);

// Shuffles the sorted patient ids with Rng(seed), takes the first
// round(holdout_frac * n) as test patients and deals the rest round-robin
// into n_folds folds. Each patient list is returned sorted.
SplitPlan split_patientwise(const Dataset& dataset, int n_folds = 5, double holdout_frac = 0.15,
                            std::uint64_t seed = 0);
SplitPlan split_patientwise(std::vector<int> patients, int n_folds, double holdout_frac,
                            std::uint64_t seed);

struct AugmentParams {
  double crop_scale_min = 0.20;
  double crop_scale_max = 1.00;
  int out_height = 32;
  int out_width = 64;
  double hflip_prob = 0.5;

  void validate() const;
};

void to_json(nlohmann::json& j, const AugmentParams& a);
void from_json(const nlohmann::json& j, AugmentParams& a);

// One geometric transform, shared by both images of a pair.
struct AugmentDraw {
  CropRect rect;
  bool hflip = false;
};

// Crop area is scale * f * H * W with scale ~ U[min, max], where f <= 1 is the
// largest area fraction a crop with the output aspect ratio can cover (f = 1
// when input and output aspect ratios agree).
AugmentDraw sample_augment(int in_height, int in_width, const AugmentParams& params, Rng& rng);
FloatImage apply_augment(const FloatImage& image, const AugmentDraw& draw,
                         const AugmentParams& params);
std::pair<FloatImage, FloatImage> augment_pair(const FloatImage& img1, const FloatImage& img2,
                                               const AugmentParams& params, Rng& rng);

// Evaluation-time transform: largest centred crop with the output aspect
// ratio, resized to the output size (identity when sizes agree).
FloatImage center_resize(const FloatImage& image, int out_height, int out_width);

// Normalised network inputs for every image of the store, centre-resized to
// (out_height, out_width).
std::vector<FloatImage> float_images(const ImageStore& store, int out_height, int out_width);

// Sampling with replacement where item i has weight 1 / count(label_i).
// Implemented as: pick a present class uniformly, then an item of that class
// uniformly, which yields exactly those item probabilities.
class BalancedSampler {
 public:
  explicit BalancedSampler(std::span<const Progression> labels);

  std::size_t next(Rng& rng) const;
  std::vector<std::size_t> draw(std::size_t n, Rng& rng) const;

  // Probability of drawing item i.
  double item_probability(std::size_t i) const;
  const std::vector<Progression>& present_classes() const { return present_; }

 private:
  std::vector<Progression> labels_;
  std::vector<Progression> present_;
  std::array<std::vector<std::size_t>, kNumClasses> by_class_;
};

}  // namespace progstate
