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

#include "progstate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>

#include "progstate/errors.hpp"
#include "progstate/json_util.hpp"
#include "progstate/synthgen.hpp"

namespace progstate {

ImageStore::ImageStore(std::vector<Image> images) : images_(std::move(images)) {
  for (const auto& img : images_) {
    height_ = std::max(height_, img.height);
    width_ = std::max(width_, img.width);
  }
  for (auto& img : images_) {
    if (img.height != height_ || img.width != width_) img = pad_to(img, height_, width_);
  }
}

ImageStore::ImageStore(std::vector<std::filesystem::path> paths, int height, int width)
    : paths_(std::move(paths)), height_(height), width_(width) {}

void ImageStore::preload() {
  if (loaded()) return;
  std::vector<Image> images;
  images.reserve(paths_.size());
  for (const auto& p : paths_) {
    Image img = read_pgm(p);
    if (img.height != height_ || img.width != width_) img = pad_to(img, height_, width_);
    images.push_back(std::move(img));
  }
  images_ = std::move(images);
}

const Image& ImageStore::at(std::size_t i) const {
  if (!loaded()) throw Error("image store not loaded; call preload()");
  return images_.at(i);
}

namespace {

void index_pairs(Dataset& ds) {
  ds.patient_index.clear();
  ds.label_histogram.fill(0);
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    ds.patient_index[ds.pairs[i].patient_id].push_back(static_cast<int>(i));
    ds.label_histogram[index_of(ds.pairs[i].label)]++;
  }
}

}  // namespace

Dataset Dataset::from_cohort(const SyntheticCohort& cohort) {
  Dataset ds;
  std::vector<Image> images;
  images.reserve(cohort.images.size());
  for (const auto& rec : cohort.images) images.push_back(rec.image);
  ds.images = ImageStore(std::move(images));
  ds.pairs.reserve(cohort.pairs.size());
  for (const auto& p : cohort.pairs) {
    PairSample s;
    s.pair_id = p.pair_id;
    s.img1 = p.img1;
    s.img2 = p.img2;
    s.label = p.label;
    s.clean_label = p.clean_label;
    s.patient_id = p.patient_id;
    s.visit_from = p.visit_from;
    s.visit_to = p.visit_to;
    s.scan_index = p.scan_index;
    s.corrupted = p.corrupted;
    s.severities = std::make_pair(cohort.images[p.img1].state.severity,
                                  cohort.images[p.img2].state.severity);
    ds.pairs.push_back(s);
  }
  index_pairs(ds);
  return ds;
}

std::vector<int> Dataset::patients() const {
  std::vector<int> out;
  out.reserve(patient_index.size());
  for (const auto& [pid, _] : patient_index) out.push_back(pid);
  return out;
}

std::vector<int> Dataset::pair_indices(std::span<const int> patient_ids) const {
  std::vector<int> out;
  for (int pid : patient_ids) {
    auto it = patient_index.find(pid);
    if (it != patient_index.end()) out.insert(out.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

int Dataset::max_pair_id() const {
  int m = -1;
  for (const auto& p : pairs) m = std::max(m, p.pair_id);
  return m;
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + manifest.string());
  const fs::path root = manifest.parent_path();

  Dataset ds;
  std::vector<fs::path> paths;
  std::vector<PgmHeader> headers;
  std::unordered_map<std::string, int> path_index;
  std::set<int> seen_ids;

  auto intern = [&](const std::string& rel, std::size_t record) -> int {
    auto it = path_index.find(rel);
    if (it != path_index.end()) return it->second;
    fs::path full = root / rel;
    if (!fs::exists(full)) {
      throw IoError("record " + std::to_string(record) + ": missing image file " +
                    full.string());
    }
    headers.push_back(read_pgm_header(full));
    paths.push_back(full);
    int idx = static_cast<int>(paths.size()) - 1;
    path_index.emplace(rel, idx);
    return idx;
  };

  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const std::string where = "manifest record " + std::to_string(record);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where + ": malformed JSON: " + e.what());
    }
    try {
      PairSample s;
      s.pair_id = j.at("pair_id").get<int>();
      s.img1 = intern(j.at("img1").get<std::string>(), record);
      s.img2 = intern(j.at("img2").get<std::string>(), record);
      auto label = parse_progression(j.at("label").get<std::string>());
      if (!label) throw FormatError(where + ": unknown label");
      s.label = *label;
      s.clean_label = s.label;
      if (j.contains("clean_label")) {
        auto clean = parse_progression(j.at("clean_label").get<std::string>());
        if (!clean) throw FormatError(where + ": unknown clean_label");
        s.clean_label = *clean;
      }
      s.patient_id = j.at("patient_id").get<int>();
      s.visit_from = j.value("visit_from", 0);
      s.visit_to = j.value("visit_to", 0);
      s.scan_index = j.value("scan_index", 0);
      if (j.contains("corrupted_flags")) {
        const auto& f = j.at("corrupted_flags");
        if (!f.is_array() || f.size() != 2) throw FormatError(where + ": corrupted_flags must have 2 entries");
        s.corrupted = {f[0].get<bool>(), f[1].get<bool>()};
      }
      if (j.contains("severity1") && j.contains("severity2")) {
        s.severities = std::make_pair(j.at("severity1").get<double>(),
                                      j.at("severity2").get<double>());
      }
      if (s.pair_id < 0 || !seen_ids.insert(s.pair_id).second) {
        throw FormatError(where + ": pair_id missing, negative or duplicated");
      }
      const auto& h1 = headers[s.img1];
      const auto& h2 = headers[s.img2];
      if (h1.width != h2.width || h1.height != h2.height) {
        throw FormatError(where + ": image dimension mismatch between " +
                          paths[s.img1].string() + " and " + paths[s.img2].string());
      }
      ds.pairs.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    ++record;
  }
  if (ds.pairs.empty()) throw FormatError("manifest has no records: " + manifest.string());

  int h = 0, w = 0;
  for (const auto& hd : headers) {
    h = std::max(h, hd.height);
    w = std::max(w, hd.width);
  }
  ds.images = ImageStore(std::move(paths), h, w);
  ds.images.preload();
  index_pairs(ds);
  return ds;
}

FoldSpec SplitPlan::fold(int i) const {
  if (i < 0 || i >= n_folds()) throw ConfigError("fold index out of range");
  FoldSpec spec;
  spec.fold = i;
  spec.val_patients = folds[i];
  for (int f = 0; f < n_folds(); ++f) {
    if (f == i) continue;
    spec.train_patients.insert(spec.train_patients.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(spec.train_patients.begin(), spec.train_patients.end());
  spec.test_patients = test_patients;
  return spec;
}

void to_json(nlohmann::json& j, const SplitPlan& plan) {
  j = nlohmann::json{{"seed", plan.seed},
                     {"holdout_frac", plan.holdout_frac},
                     {"test_patients", plan.test_patients},
                     {"folds", plan.folds}};
}

void from_json(const nlohmann::json& j, SplitPlan& plan) {
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.holdout_frac = j.at("holdout_frac").get<double>();
  plan.test_patients = j.at("test_patients").get<std::vector<int>>();
  plan.folds = j.at("folds").get<std::vector<std::vector<int>>>();
}

SplitPlan split_patientwise(const Dataset& dataset, int n_folds, double holdout_frac,
                            std::uint64_t seed) {
  return split_patientwise(dataset.patients(), n_folds, holdout_frac, seed);
}

SplitPlan split_patientwise(std::vector<int> patients, int n_folds, double holdout_frac,
                            std::uint64_t seed) {
  if (n_folds < 2) throw ConfigError("split: n_folds must be >= 2");
  if (!(holdout_frac >= 0.0 && holdout_frac < 1.0)) {
    throw ConfigError("split: holdout_frac must lie in [0, 1)");
  }
  std::sort(patients.begin(), patients.end());
  patients.erase(std::unique(patients.begin(), patients.end()), patients.end());
  const int n = static_cast<int>(patients.size());
  const int n_test = static_cast<int>(std::lround(holdout_frac * n));
  if (n - n_test < n_folds) {
    throw ConfigError("split: too few patients (" + std::to_string(n) + ") for " +
                      std::to_string(n_folds) + " folds plus " + std::to_string(n_test) +
                      " test patients");
  }
  Rng rng(seed);
  rng.shuffle(std::span<int>(patients));

  SplitPlan plan;
  plan.seed = seed;
  plan.holdout_frac = holdout_frac;
  plan.test_patients.assign(patients.begin(), patients.begin() + n_test);
  plan.folds.resize(n_folds);
  for (int i = n_test; i < n; ++i) plan.folds[(i - n_test) % n_folds].push_back(patients[i]);
  std::sort(plan.test_patients.begin(), plan.test_patients.end());
  for (auto& f : plan.folds) std::sort(f.begin(), f.end());
  return plan;
}

void AugmentParams::validate() const {
  if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0)) {
    throw ConfigError("augment: need 0 < crop_scale_min <= crop_scale_max <= 1");
  }
  if (out_height < 1 || out_width < 1) throw ConfigError("augment: output size must be positive");
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) {
    throw ConfigError("augment: hflip_prob must lie in [0,1]");
  }
}

void to_json(nlohmann::json& j, const AugmentParams& a) {
  j = nlohmann::json{{"crop_scale_min", a.crop_scale_min},
                     {"crop_scale_max", a.crop_scale_max},
                     {"out_height", a.out_height},
                     {"out_width", a.out_width},
                     {"hflip_prob", a.hflip_prob}};
}

void from_json(const nlohmann::json& j, AugmentParams& a) {
  constexpr std::string_view ctx = "augment params";
  reject_unknown_keys(j, {"crop_scale_min", "crop_scale_max", "out_height", "out_width",
                          "hflip_prob"},
                      ctx);
  read_optional(j, "crop_scale_min", a.crop_scale_min, ctx);
  read_optional(j, "crop_scale_max", a.crop_scale_max, ctx);
  read_optional(j, "out_height", a.out_height, ctx);
  read_optional(j, "out_width", a.out_width, ctx);
  read_optional(j, "hflip_prob", a.hflip_prob, ctx);
}

namespace {

// Largest crop (h, w) with aspect out_w / out_h fitting inside (in_h, in_w).
std::pair<double, double> max_crop(int in_h, int in_w, int out_h, int out_w) {
  const double aspect = static_cast<double>(out_w) / out_h;
  if (static_cast<double>(in_w) / in_h >= aspect) return {in_h, in_h * aspect};
  return {in_w / aspect, static_cast<double>(in_w)};
}

}  // namespace

AugmentDraw sample_augment(int in_height, int in_width, const AugmentParams& params, Rng& rng) {
  auto [max_h, max_w] = max_crop(in_height, in_width, params.out_height, params.out_width);
  const double scale = rng.uniform(params.crop_scale_min, params.crop_scale_max);
  const double side = std::sqrt(scale);
  AugmentDraw d;
  d.rect.height = max_h * side;
  d.rect.width = max_w * side;
  d.rect.top = rng.uniform(0.0, in_height - d.rect.height);
  d.rect.left = rng.uniform(0.0, in_width - d.rect.width);
  d.hflip = rng.bernoulli(params.hflip_prob);
  return d;
}

FloatImage apply_augment(const FloatImage& image, const AugmentDraw& draw,
                         const AugmentParams& params) {
  return crop_resize(image, draw.rect, params.out_height, params.out_width, draw.hflip);
}

std::pair<FloatImage, FloatImage> augment_pair(const FloatImage& img1, const FloatImage& img2,
                                               const AugmentParams& params, Rng& rng) {
  if (img1.height != img2.height || img1.width != img2.width) {
    throw FormatError("augment_pair: images differ in size");
  }
  AugmentDraw d = sample_augment(img1.height, img1.width, params, rng);
  return {apply_augment(img1, d, params), apply_augment(img2, d, params)};
}

FloatImage center_resize(const FloatImage& image, int out_height, int out_width) {
  if (image.height == out_height && image.width == out_width) return image;
  auto [h, w] = max_crop(image.height, image.width, out_height, out_width);
  CropRect r{(image.height - h) / 2.0, (image.width - w) / 2.0, h, w};
  return crop_resize(image, r, out_height, out_width);
}

std::vector<FloatImage> float_images(const ImageStore& store, int out_height, int out_width) {
  std::vector<FloatImage> out;
  out.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    out.push_back(center_resize(to_float(store.at(i)), out_height, out_width));
  }
  return out;
}

BalancedSampler::BalancedSampler(std::span<const Progression> labels)
    : labels_(labels.begin(), labels.end()) {
  if (labels_.empty()) throw ConfigError("balanced sampler: empty label list");
  for (std::size_t i = 0; i < labels_.size(); ++i) by_class_[index_of(labels_[i])].push_back(i);
  for (Progression p : kAllProgressions) {
    if (!by_class_[index_of(p)].empty()) present_.push_back(p);
  }
}

std::size_t BalancedSampler::next(Rng& rng) const {
  const auto& bucket = by_class_[index_of(present_[rng.below(present_.size())])];
  return bucket[rng.below(bucket.size())];
}

std::vector<std::size_t> BalancedSampler::draw(std::size_t n, Rng& rng) const {
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = next(rng);
  return out;
}

double BalancedSampler::item_probability(std::size_t i) const {
  const auto& bucket = by_class_[index_of(labels_.at(i))];
  return 1.0 / (static_cast<double>(present_.size()) * static_cast<double>(bucket.size()));
}

}  // namespace progstate
