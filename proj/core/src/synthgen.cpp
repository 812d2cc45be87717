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

#include "progstate/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "progstate/errors.hpp"
#include "progstate/json_util.hpp"
#include "progstate/parallel.hpp"

namespace progstate {

std::string_view to_string(Progression p) {
  switch (p) {
    case Progression::kBetter: return "BETTER";
    case Progression::kWorse: return "WORSE";
    case Progression::kStable: return "STABLE";
    case Progression::kOther: return "OTHER";
  }
  return "?";
}

std::optional<Progression> parse_progression(std::string_view s) {
  for (Progression p : kAllProgressions) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("invalid cohort config: ") + what);
}

}  // namespace

void CohortConfig::validate() const {
  require(n_patients >= 1, "n_patients must be >= 1");
  require(visits_per_patient >= 1, "visits_per_patient must be >= 1");
  require(scans_per_volume >= 1, "scans_per_volume must be >= 1");
  require(image_height >= 16 && image_width >= 16, "image dims must be >= 16");
  require(tau > 0.0, "tau must be > 0");
  require(flip_rate >= 0.0 && flip_rate <= 1.0, "flip_rate must lie in [0,1]");
  require(other_rate >= 0.0 && other_rate <= 1.0, "other_rate must lie in [0,1]");
  require(scan_jitter >= 0.0, "scan_jitter must be >= 0");
  require(severity_step >= 0.0, "severity_step must be >= 0");
  require(severity_max > 0.0, "severity_max must be > 0");
  require(noise_sigma >= 0.0, "noise_sigma must be >= 0");
}

void to_json(nlohmann::json& j, const CohortConfig& c) {
  j = nlohmann::json{{"n_patients", c.n_patients},
                     {"visits_per_patient", c.visits_per_patient},
                     {"scans_per_volume", c.scans_per_volume},
                     {"image_height", c.image_height},
                     {"image_width", c.image_width},
                     {"tau", c.tau},
                     {"flip_rate", c.flip_rate},
                     {"other_rate", c.other_rate},
                     {"scan_jitter", c.scan_jitter},
                     {"severity_step", c.severity_step},
                     {"severity_max", c.severity_max},
                     {"noise_sigma", c.noise_sigma},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, CohortConfig& c) {
  constexpr std::string_view ctx = "cohort config";
  reject_unknown_keys(j,
                      {"n_patients", "visits_per_patient", "scans_per_volume", "image_height",
                       "image_width", "tau", "flip_rate", "other_rate", "scan_jitter",
                       "severity_step", "severity_max", "noise_sigma", "seed"},
                      ctx);
  read_optional(j, "n_patients", c.n_patients, ctx);
  read_optional(j, "visits_per_patient", c.visits_per_patient, ctx);
  read_optional(j, "scans_per_volume", c.scans_per_volume, ctx);
  read_optional(j, "image_height", c.image_height, ctx);
  read_optional(j, "image_width", c.image_width, ctx);
  read_optional(j, "tau", c.tau, ctx);
  read_optional(j, "flip_rate", c.flip_rate, ctx);
  read_optional(j, "other_rate", c.other_rate, ctx);
  read_optional(j, "scan_jitter", c.scan_jitter, ctx);
  read_optional(j, "severity_step", c.severity_step, ctx);
  read_optional(j, "severity_max", c.severity_max, ctx);
  read_optional(j, "noise_sigma", c.noise_sigma, ctx);
  read_optional(j, "seed", c.seed, ctx);
}

double Blob::area() const { return std::numbers::pi * semi_x * semi_y; }

int blob_count(double severity) {
  if (severity <= 0.0) return 0;
  return std::min(kMaxBlobs, static_cast<int>(std::ceil(severity)));
}

double total_blob_area(double severity, int height, int width) {
  return kAreaFractionPerUnit * std::max(severity, 0.0) * height * width;
}

double background_intensity(int row, int height) {
  // Eight horizontal bands: dark vitreous, bright retinal layers, dark choroid.
  static constexpr double kBands[8] = {20.0, 30.0, 90.0, 125.0, 100.0, 135.0, 60.0, 40.0};
  int band = std::clamp(row * 8 / height, 0, 7);
  return kBands[band];
}

std::vector<Blob> layout_blobs(double severity, const RenderParams& params, Rng& rng) {
  const int k = blob_count(severity);
  std::vector<Blob> blobs;
  blobs.reserve(k);
  if (k == 0) return blobs;
  const double each = total_blob_area(severity, params.height, params.width) / k;
  // pi * a * (a / 2) = each
  const double semi_x = std::sqrt(2.0 * each / std::numbers::pi);
  const double semi_y = semi_x / 2.0;
  for (int i = 0; i < k; ++i) {
    Blob b;
    b.semi_x = semi_x;
    b.semi_y = semi_y;
    b.center_y = rng.uniform(0.3 * params.height, 0.7 * params.height);
    double margin = std::min(semi_x, 0.5 * params.width);
    b.center_x = rng.uniform(margin, params.width - margin);
    blobs.push_back(b);
  }
  return blobs;
}

namespace {

// Fraction of the pixel (y, x) covered by the ellipse, 4x4 supersampled.
double coverage(const Blob& b, int y, int x) {
  int inside = 0;
  for (int sy = 0; sy < 4; ++sy) {
    for (int sx = 0; sx < 4; ++sx) {
      double py = y + (sy + 0.5) / 4.0 - b.center_y;
      double px = x + (sx + 0.5) / 4.0 - b.center_x;
      double r = (px * px) / (b.semi_x * b.semi_x) + (py * py) / (b.semi_y * b.semi_y);
      inside += r <= 1.0;
    }
  }
  return inside / 16.0;
}

}  // namespace

Image render_bscan(const LatentState& state, const RenderParams& params, Rng& rng) {
  const int h = params.height;
  const int w = params.width;
  std::vector<double> canvas(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    double bg = background_intensity(y, h);
    std::fill_n(&canvas[static_cast<std::size_t>(y) * w], w, bg);
  }
  for (const Blob& b : layout_blobs(state.severity, params, rng)) {
    int y0 = std::max(0, static_cast<int>(std::floor(b.center_y - b.semi_y)));
    int y1 = std::min(h - 1, static_cast<int>(std::ceil(b.center_y + b.semi_y)));
    int x0 = std::max(0, static_cast<int>(std::floor(b.center_x - b.semi_x)));
    int x1 = std::min(w - 1, static_cast<int>(std::ceil(b.center_x + b.semi_x)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        canvas[static_cast<std::size_t>(y) * w + x] += kBlobAmplitude * coverage(b, y, x);
      }
    }
  }
  Image img(h, w);
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    double v = canvas[i] + params.noise_sigma * rng.normal();
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return img;
}

void corrupt_image(Image& image, Rng& rng) {
  const double m = mean_intensity(image);
  for (auto& px : image.pixels) {
    double v = m + 0.25 * (px - m);
    if (rng.bernoulli(0.3)) v = rng.bernoulli(0.5) ? 255.0 : 0.0;
    px = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
}

Progression clean_progression(double s1, double s2, double tau) {
  const double d = s2 - s1;
  if (d <= -tau) return Progression::kBetter;
  if (d >= tau) return Progression::kWorse;
  return Progression::kStable;
}

ProgressionLabel label_pair(double s1, double s2, const CohortConfig& config, Rng& rng) {
  ProgressionLabel out;
  out.clean_label = clean_progression(s1, s2, config.tau);
  out.label = out.clean_label;
  if (rng.uniform() < config.other_rate) {
    out.corrupted_image = static_cast<int>(rng.below(2));
    out.label = Progression::kOther;
    return out;
  }
  if (rng.uniform() < config.flip_rate) {
    Progression alternatives[2];
    int n = 0;
    for (Progression p : {Progression::kBetter, Progression::kWorse, Progression::kStable}) {
      if (p != out.clean_label) alternatives[n++] = p;
    }
    out.label = alternatives[rng.below(2)];
  }
  return out;
}

namespace {

struct PatientBlock {
  std::vector<ImageRecord> images;
  std::vector<PairRecord> pairs;  // img indices local to the block, pair_id unset
};

PatientBlock gen_patient(const CohortConfig& c, int patient) {
  Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(patient)));
  const RenderParams render{c.image_height, c.image_width, c.noise_sigma};
  PatientBlock block;

  std::vector<double> visit(c.visits_per_patient);
  visit[0] = rng.uniform(0.0, c.severity_max);
  for (int v = 1; v < c.visits_per_patient; ++v) {
    visit[v] = std::clamp(visit[v - 1] + c.severity_step * rng.normal(), 0.0, c.severity_max);
  }

  block.images.reserve(static_cast<std::size_t>(c.visits_per_patient) * c.scans_per_volume);
  for (int v = 0; v < c.visits_per_patient; ++v) {
    for (int s = 0; s < c.scans_per_volume; ++s) {
      ImageRecord rec;
      rec.state = {patient, v, s,
                   std::clamp(visit[v] + c.scan_jitter * rng.normal(), 0.0, c.severity_max)};
      rec.name = fmt::format("p{:03d}_v{:02d}_s{:02d}", patient, v, s);
      rec.image = render_bscan(rec.state, render, rng);
      block.images.push_back(std::move(rec));
    }
  }

  auto image_index = [&](int v, int s) { return v * c.scans_per_volume + s; };
  for (int v = 0; v + 1 < c.visits_per_patient; ++v) {
    for (int s = 0; s < c.scans_per_volume; ++s) {
      PairRecord pr;
      pr.img1 = image_index(v, s);
      pr.img2 = image_index(v + 1, s);
      pr.patient_id = patient;
      pr.visit_from = v;
      pr.visit_to = v + 1;
      pr.scan_index = s;
      const double s1 = block.images[pr.img1].state.severity;
      const double s2 = block.images[pr.img2].state.severity;
      ProgressionLabel lab = label_pair(s1, s2, c, rng);
      pr.label = lab.label;
      pr.clean_label = lab.clean_label;
      if (lab.corrupted_image >= 0) {
        // The corrupted copy is private to this pair; the clean original stays
        // referenced by the neighbouring pair of the same scan.
        int& slot = lab.corrupted_image == 0 ? pr.img1 : pr.img2;
        ImageRecord copy = block.images[slot];
        copy.corrupted = true;
        corrupt_image(copy.image, rng);
        copy.name += fmt::format("_x{:02d}", v);
        block.images.push_back(std::move(copy));
        slot = static_cast<int>(block.images.size()) - 1;
        pr.corrupted[lab.corrupted_image] = true;
      }
      block.pairs.push_back(pr);
    }
  }
  return block;
}

}  // namespace

SyntheticCohort gen_cohort(const CohortConfig& config, unsigned threads) {
  config.validate();
  std::vector<PatientBlock> blocks(config.n_patients);
  parallel_for(blocks.size(), threads,
               [&](std::size_t p) { blocks[p] = gen_patient(config, static_cast<int>(p)); });

  SyntheticCohort cohort;
  cohort.config = config;
  cohort.pairs.reserve(expected_pair_count(config));
  for (auto& block : blocks) {
    const int offset = static_cast<int>(cohort.images.size());
    for (auto& img : block.images) cohort.images.push_back(std::move(img));
    for (auto pr : block.pairs) {
      pr.pair_id = static_cast<int>(cohort.pairs.size());
      pr.img1 += offset;
      pr.img2 += offset;
      cohort.pairs.push_back(pr);
    }
  }
  return cohort;
}

std::filesystem::path write_dataset(const SyntheticCohort& cohort,
                                    const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory / "images", ec);
  if (ec) throw IoError("cannot create " + (directory / "images").string() + ": " + ec.message());

  for (const auto& rec : cohort.images) {
    write_pgm(directory / "images" / (rec.name + ".pgm"), rec.image);
  }

  const fs::path manifest = directory / "manifest.jsonl";
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + manifest.string());
  for (const auto& p : cohort.pairs) {
    const auto& a = cohort.images[p.img1];
    const auto& b = cohort.images[p.img2];
    nlohmann::ordered_json rec;
    rec["pair_id"] = p.pair_id;
    rec["img1"] = "images/" + a.name + ".pgm";
    rec["img2"] = "images/" + b.name + ".pgm";
    rec["label"] = to_string(p.label);
    rec["clean_label"] = to_string(p.clean_label);
    rec["patient_id"] = p.patient_id;
    rec["visit_from"] = p.visit_from;
    rec["visit_to"] = p.visit_to;
    rec["scan_index"] = p.scan_index;
    rec["corrupted_flags"] = {p.corrupted[0], p.corrupted[1]};
    rec["severity1"] = a.state.severity;
    rec["severity2"] = b.state.severity;
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + manifest.string());

  std::ofstream cfg(directory / "cohort.json", std::ios::binary);
  if (!cfg) throw IoError("cannot open for writing: " + (directory / "cohort.json").string());
  cfg << nlohmann::json(cohort.config).dump(2) << '\n';
  return manifest;
}

void ActivityConfig::validate() const {
  if (n_images < 2) throw ConfigError("activity config: n_images must be >= 2");
  if (image_height < 16 || image_width < 16) {
    throw ConfigError("activity config: image dims must be >= 16");
  }
  if (!(cutoff > 0.0 && cutoff < severity_max)) {
    throw ConfigError("activity config: cutoff must lie in (0, severity_max)");
  }
  if (noise_sigma < 0.0) throw ConfigError("activity config: noise_sigma must be >= 0");
}

void to_json(nlohmann::json& j, const ActivityConfig& c) {
  j = nlohmann::json{{"n_images", c.n_images},         {"image_height", c.image_height},
                     {"image_width", c.image_width},   {"severity_max", c.severity_max},
                     {"cutoff", c.cutoff},             {"noise_sigma", c.noise_sigma},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ActivityConfig& c) {
  constexpr std::string_view ctx = "activity config";
  reject_unknown_keys(j,
                      {"n_images", "image_height", "image_width", "severity_max", "cutoff",
                       "noise_sigma", "seed"},
                      ctx);
  read_optional(j, "n_images", c.n_images, ctx);
  read_optional(j, "image_height", c.image_height, ctx);
  read_optional(j, "image_width", c.image_width, ctx);
  read_optional(j, "severity_max", c.severity_max, ctx);
  read_optional(j, "cutoff", c.cutoff, ctx);
  read_optional(j, "noise_sigma", c.noise_sigma, ctx);
  read_optional(j, "seed", c.seed, ctx);
}

ActivitySet gen_activity_set(const ActivityConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const RenderParams render{config.image_height, config.image_width, config.noise_sigma};
  ActivitySet set;
  set.images.reserve(config.n_images);
  for (int i = 0; i < config.n_images; ++i) {
    LatentState st{i, 0, 0, rng.uniform(0.0, config.severity_max)};
    set.severities.push_back(st.severity);
    set.labels.push_back(st.severity > config.cutoff ? 1 : 0);
    set.images.push_back(render_bscan(st, render, rng));
  }
  return set;
}

}  // namespace progstate
