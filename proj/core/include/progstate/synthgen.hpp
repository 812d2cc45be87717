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
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "progstate/image.hpp"
#include "progstate/labels.hpp"
#include "progstate/rng.hpp"

namespace progstate {

struct CohortConfig {
  int n_patients = 40;
  int visits_per_patient = 8;
  int scans_per_volume = 8;
  int image_height = 32;
  int image_width = 64;
  double tau = 0.5;             // stable half-width in severity units
  double flip_rate = 0.0;       // eta: probability of a flipped progression label
  double other_rate = 0.05;     // rho: probability that a pair is corrupted (OTHER)
  double scan_jitter = 0.1;     // std of per-scan deviation from the visit severity
  double severity_step = 0.8;   // std of the per-visit random walk
  double severity_max = 4.0;    // walk is clipped to [0, severity_max]
  double noise_sigma = 8.0;     // additive pixel noise, gray levels
  std::uint64_t seed = 7;

  // Throws ConfigError naming the first violated invariant.
  void validate() const;
};

void to_json(nlohmann::json& j, const CohortConfig& c);
// Rejects unknown keys; missing keys keep their defaults.
void from_json(const nlohmann::json& j, CohortConfig& c);

struct LatentState {
  int patient_id = 0;
  int visit_index = 0;
  int scan_index = 0;
  double severity = 0.0;
};

struct RenderParams {
  int height = 32;
  int width = 64;
  double noise_sigma = 8.0;
};

// Elliptical lesion with 2:1 horizontal aspect.
struct Blob {
  double center_y = 0.0;
  double center_x = 0.0;
  double semi_x = 0.0;
  double semi_y = 0.0;
  double area() const;
};

// Imaging model. Severity s >= 0 maps to ceil(s) blobs (at most
// kMaxBlobs) whose nominal areas sum to kAreaFractionPerUnit * s * H * W;
// each blob adds kBlobAmplitude gray levels with anti-aliased coverage on top
// of a fixed horizontally layered background. The severity -> total area map
// is linear, hence invertible in expectation from the mean intensity.
inline constexpr int kMaxBlobs = 6;
inline constexpr double kAreaFractionPerUnit = 0.02;
inline constexpr double kBlobAmplitude = 100.0;

int blob_count(double severity);
double total_blob_area(double severity, int height, int width);
double background_intensity(int row, int height);

std::vector<Blob> layout_blobs(double severity, const RenderParams& params, Rng& rng);
Image render_bscan(const LatentState& state, const RenderParams& params, Rng& rng);

// Contrast collapse towards the mean followed by 30% salt-and-pepper.
void corrupt_image(Image& image, Rng& rng);

struct ProgressionLabel {
  Progression label = Progression::kStable;
  Progression clean_label = Progression::kStable;
  int corrupted_image = -1;  // 0 or 1 when label == OTHER
};

// Geometric label of a severity change, before noise.
Progression clean_progression(double s1, double s2, double tau);
ProgressionLabel label_pair(double s1, double s2, const CohortConfig& config, Rng& rng);

struct ImageRecord {
  LatentState state;
  bool corrupted = false;
  std::string name;  // file stem, unique within a cohort
  Image image;
};

struct PairRecord {
  int pair_id = 0;
  int img1 = 0;  // indices into SyntheticCohort::images
  int img2 = 0;
  Progression label = Progression::kStable;
  Progression clean_label = Progression::kStable;
  int patient_id = 0;
  int visit_from = 0;
  int visit_to = 0;
  int scan_index = 0;
  std::array<bool, 2> corrupted{false, false};
};

struct SyntheticCohort {
  CohortConfig config;
  std::vector<ImageRecord> images;
  std::vector<PairRecord> pairs;
};

// Deterministic given config.seed; each patient draws from its own stream
// derive_seed(seed, patient_id), so patients are generated independently.
SyntheticCohort gen_cohort(const CohortConfig& config, unsigned threads = 1);

inline std::size_t expected_pair_count(const CohortConfig& c) {
  return static_cast<std::size_t>(c.n_patients) * (c.visits_per_patient - 1) *
         c.scans_per_volume;
}

// Writes images/<name>.pgm, manifest.jsonl and cohort.json under `directory`
// (created if missing). Returns the manifest path.
std::filesystem::path write_dataset(const SyntheticCohort& cohort,
                                    const std::filesystem::path& directory);

// Single-image set with binary activity labels (severity above a cutoff),
// rendered with a different noise level than the training cohort.
struct ActivityConfig {
  int n_images = 1998;
  int image_height = 32;
  int image_width = 64;
  double severity_max = 4.0;
  double cutoff = 2.0;
  double noise_sigma = 12.0;
  std::uint64_t seed = 11;

  void validate() const;
};

void to_json(nlohmann::json& j, const ActivityConfig& c);
void from_json(const nlohmann::json& j, ActivityConfig& c);

struct ActivitySet {
  std::vector<Image> images;
  std::vector<int> labels;  // 1 = active
  std::vector<double> severities;
};

ActivitySet gen_activity_set(const ActivityConfig& config);

}  // namespace progstate
