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

#include "progstate/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>

#include "progstate/encoder.hpp"
#include "progstate/errors.hpp"
#include "progstate/parallel.hpp"

namespace progstate {

Progression classify_pair(double y_d, double y_o, const DecisionThresholds& th) {
  if (y_o > th.t_o) return Progression::kOther;
  return classify_progression(y_d, th.t);
}

Progression classify_progression(double y_d, double t) {
  if (y_d < 0.5 - t) return Progression::kWorse;
  if (y_d > 0.5 + t) return Progression::kBetter;
  return Progression::kStable;
}

ConfusionMatrix confusion_matrix(std::span<const double> y_d, std::span<const double> y_o,
                                 std::span<const Progression> labels,
                                 const DecisionThresholds& th) {
  if (y_d.size() != labels.size() || y_o.size() != labels.size()) {
    throw ConfigError("confusion_matrix: size mismatch");
  }
  ConfusionMatrix cm(kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    cm.add(index_of(labels[i]), index_of(classify_pair(y_d[i], y_o[i], th)));
  }
  return cm;
}

DecisionThresholds calibrate_boundary(std::span<const double> y_d, std::span<const double> y_o,
                                      std::span<const Progression> labels) {
  if (labels.empty()) throw ConfigError("calibrate_boundary: empty validation set");
  DecisionThresholds best;
  double best_f1 = -1.0;
  for (int i = 0; i < kBoundaryGridSize; ++i) {
    DecisionThresholds th{i * kBoundaryGridStep, 0.5};
    const double f1 = metric_suite(confusion_matrix(y_d, y_o, labels, th)).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best = th;
    }
  }
  return best;
}

namespace {

// Distinct image indices referenced by the pairs, ascending.
std::vector<int> referenced_images(const Dataset& dataset, std::span<const int> pair_indices) {
  std::vector<int> ids;
  ids.reserve(pair_indices.size() * 2);
  for (int i : pair_indices) {
    ids.push_back(dataset.pairs.at(i).img1);
    ids.push_back(dataset.pairs.at(i).img2);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

FloatImage network_input(const Dataset& dataset, int image, const EncoderConfig& enc) {
  return center_resize(to_float(dataset.images.at(image)), enc.input_height, enc.input_width);
}

}  // namespace

std::vector<PairPrediction> predict_pairs(const ModelParams& params, const Dataset& dataset,
                                          std::span<const int> pair_indices, unsigned threads) {
  if (params.kind != ModelKind::kSiamese) throw ConfigError("predict_pairs needs a siamese model");
  SiameseNet net(params.encoder);
  const auto ids = referenced_images(dataset, pair_indices);
  std::vector<ImageLogits> logits(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t i) {
    logits[i] = net.encode(params.values, network_input(dataset, ids[i], params.encoder));
  });
  auto lookup = [&](int image) {
    return logits[std::lower_bound(ids.begin(), ids.end(), image) - ids.begin()];
  };
  std::vector<PairPrediction> out;
  out.reserve(pair_indices.size());
  for (int i : pair_indices) {
    const auto& p = dataset.pairs[i];
    out.push_back(combine(lookup(p.img1), lookup(p.img2)));
  }
  return out;
}

std::vector<std::array<double, 4>> predict_naive(const ModelParams& params,
                                                 const Dataset& dataset,
                                                 std::span<const int> pair_indices,
                                                 unsigned threads) {
  if (params.kind != ModelKind::kNaive) throw ConfigError("predict_naive needs a naive model");
  NaiveNet net(params.encoder);
  const auto ids = referenced_images(dataset, pair_indices);
  std::vector<EncoderCache> caches(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t i) {
    net.encoder().forward(params.values, network_input(dataset, ids[i], params.encoder),
                          caches[i]);
  });
  auto lookup = [&](int image) -> const EncoderCache& {
    return caches[std::lower_bound(ids.begin(), ids.end(), image) - ids.begin()];
  };
  std::vector<std::array<double, 4>> out;
  out.reserve(pair_indices.size());
  for (int i : pair_indices) {
    const auto& p = dataset.pairs[i];
    out.push_back(softmax(net.logits(params.values, lookup(p.img1), lookup(p.img2))));
  }
  return out;
}

std::vector<PairPrediction> oracle_predictions(const Dataset& dataset,
                                               std::span<const int> pair_indices) {
  std::vector<PairPrediction> out;
  out.reserve(pair_indices.size());
  for (int i : pair_indices) {
    PairPrediction p;
    switch (dataset.pairs.at(i).label) {
      case Progression::kBetter: p.y_d = 0.99; break;
      case Progression::kWorse: p.y_d = 0.01; break;
      default: p.y_d = 0.5; break;
    }
    p.y_o = dataset.pairs[i].label == Progression::kOther ? 0.99 : 0.01;
    p.delta_d = std::log(p.y_d / (1.0 - p.y_d));
    out.push_back(p);
  }
  return out;
}

ConfusionMatrix confusion_argmax(std::span<const std::array<double, 4>> probs,
                                 std::span<const Progression> labels) {
  if (probs.size() != labels.size()) throw ConfigError("confusion_argmax: size mismatch");
  ConfusionMatrix cm(kNumClasses);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int pred = static_cast<int>(std::max_element(probs[i].begin(), probs[i].end()) -
                                      probs[i].begin());
    cm.add(index_of(labels[i]), pred);
  }
  return cm;
}

std::vector<Progression> labels_of(const Dataset& dataset, std::span<const int> pair_indices) {
  std::vector<Progression> out;
  out.reserve(pair_indices.size());
  for (int i : pair_indices) out.push_back(dataset.pairs.at(i).label);
  return out;
}

std::string format_double(double v) { return fmt::format("{}", v); }

std::string delta_scatter_csv(const Dataset& dataset, std::span<const int> pair_indices,
                              std::span<const PairPrediction> predictions) {
  if (pair_indices.size() != predictions.size()) {
    throw ConfigError("delta_scatter_csv: size mismatch");
  }
  std::string out = "pair_id,delta_d,y_o,label,clean_label\n";
  for (std::size_t i = 0; i < pair_indices.size(); ++i) {
    const auto& p = dataset.pairs.at(pair_indices[i]);
    out += fmt::format("{},{},{},{},{}\n", p.pair_id, format_double(predictions[i].delta_d),
                       format_double(predictions[i].y_o), to_string(p.label),
                       to_string(p.clean_label));
  }
  return out;
}

std::string_view to_string(TransitionGroup g) {
  switch (g) {
    case TransitionGroup::kBetterWorse: return "better<->worse";
    case TransitionGroup::kBetterStable: return "better<->stable";
    case TransitionGroup::kWorseStable: return "worse<->stable";
    case TransitionGroup::kSameLabel: return "same-label";
  }
  return "?";
}

GammaGroupStats GammaReport::progression_stable() const {
  GammaGroupStats s;
  for (auto g : {TransitionGroup::kBetterStable, TransitionGroup::kWorseStable}) {
    s.n += group(g).n;
    s.below += group(g).below;
  }
  return s;
}

namespace {

TransitionGroup transition_of(Progression a, Progression b) {
  if (a == b) return TransitionGroup::kSameLabel;
  auto has = [&](Progression p) { return a == p || b == p; };
  if (has(Progression::kBetter) && has(Progression::kWorse)) return TransitionGroup::kBetterWorse;
  if (has(Progression::kBetter)) return TransitionGroup::kBetterStable;
  return TransitionGroup::kWorseStable;
}

}  // namespace

GammaReport gamma_adjacency_report(const AlphaTable& alpha, const Dataset& dataset,
                                   std::span<const int> pair_indices, double threshold) {
  GammaReport report;
  report.threshold = threshold;
  using Key = std::tuple<int, int, int, int>;  // patient, from, to, scan
  std::map<Key, int> index;
  for (int i : pair_indices) {
    const auto& p = dataset.pairs.at(i);
    index.emplace(Key{p.patient_id, p.visit_from, p.visit_to, p.scan_index}, i);
    report.per_pair_gamma.emplace_back(p.pair_id, alpha.gamma(p.pair_id));
  }
  std::size_t adjacencies = 0;
  for (const auto& [key, i] : index) {
    auto [patient, from, to, scan] = key;
    auto it = index.find(Key{patient, from, to, scan + 1});
    if (it == index.end()) continue;
    const auto& a = dataset.pairs[i];
    const auto& b = dataset.pairs[it->second];
    if (a.label == Progression::kOther || b.label == Progression::kOther) continue;
    ++adjacencies;
    auto& g = report.groups[static_cast<int>(transition_of(a.label, b.label))];
    for (const auto* p : {&a, &b}) {
      g.n++;
      if (alpha.gamma(p->pair_id) < threshold) g.below++;
    }
  }
  if (adjacencies == 0) {
    throw FormatError("gamma_adjacency_report: no scan-adjacent pairs in the selection");
  }
  return report;
}

void to_json(nlohmann::json& j, const GammaReport& r) {
  j = nlohmann::json::object();
  j["threshold"] = r.threshold;
  nlohmann::json groups = nlohmann::json::object();
  for (int g = 0; g < 4; ++g) {
    const auto& s = r.groups[g];
    groups[std::string(to_string(static_cast<TransitionGroup>(g)))] = {
        {"n", s.n}, {"below", s.below}, {"fraction", s.fraction()}};
  }
  const auto ps = r.progression_stable();
  groups["progression<->stable"] = {{"n", ps.n}, {"below", ps.below}, {"fraction", ps.fraction()}};
  j["groups"] = groups;
}

void to_json(nlohmann::json& j, const MetricSuite& m) {
  j = nlohmann::json{{"f1", m.f1},
                     {"rk", m.rk},
                     {"specificity", m.specificity},
                     {"bal_acc", m.balanced_accuracy},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"zero_denominator", m.zero_denominator}};
}

void to_json(nlohmann::json& j, const DecisionThresholds& t) {
  j = nlohmann::json{{"t", t.t}, {"t_o", t.t_o}};
}

MetricAggregate aggregate_metrics(std::span<const MetricSuite> folds) {
  if (folds.empty()) throw ConfigError("aggregate_metrics: no folds");
  MetricAggregate agg;
  auto column = [&](double MetricSuite::*field) {
    std::vector<double> v;
    for (const auto& m : folds) v.push_back(m.*field);
    const auto ms = mean_std(v);
    agg.mean.*field = ms.mean;
    agg.std.*field = ms.std;
  };
  for (auto field : {&MetricSuite::f1, &MetricSuite::rk, &MetricSuite::specificity,
                     &MetricSuite::balanced_accuracy, &MetricSuite::precision,
                     &MetricSuite::recall}) {
    column(field);
  }
  return agg;
}

std::string metrics_table_csv(std::span<const MetricSuite> folds) {
  std::string out = "row,f1,rk,specificity,bal_acc,precision,recall\n";
  auto row = [&](const std::string& name, const MetricSuite& m) {
    out += fmt::format("{},{},{},{},{},{},{}\n", name, format_double(m.f1), format_double(m.rk),
                       format_double(m.specificity), format_double(m.balanced_accuracy),
                       format_double(m.precision), format_double(m.recall));
  };
  for (std::size_t i = 0; i < folds.size(); ++i) row(fmt::format("fold{}", i), folds[i]);
  const auto agg = aggregate_metrics(folds);
  row("mean", agg.mean);
  row("std", agg.std);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace progstate
