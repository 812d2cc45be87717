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

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>

#include <fmt/format.h>

#include "progstate/checkpoint.hpp"
#include "progstate/dataset.hpp"
#include "progstate/errors.hpp"
#include "progstate/eval.hpp"
#include "progstate/fewshot.hpp"
#include "progstate/json_util.hpp"
#include "progstate/synthgen.hpp"
#include "progstate/train.hpp"
#include "run_dir.hpp"

namespace progstate::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json j = read_json_file(path);
  if (!j.is_object()) throw ConfigError(path + ": configuration must be a JSON object");
  return j;
}

// Converts a JSON sub-document, turning type errors into ConfigError.
template <typename T>
T parse_section(const json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", what, e.what()));
  }
}

template <typename T>
void override_with(std::optional<T> flag, T& target) {
  if (flag) target = *flag;
}

std::string histogram_text(const Dataset& ds) {
  std::string s;
  for (auto p : kAllProgressions) {
    s += fmt::format("{}{}={}", s.empty() ? "" : " ", to_string(p), ds.label_histogram[index_of(p)]);
  }
  return s;
}

FoldSpec spec_from_meta(const Checkpoint& c, int fallback_fold) {
  FoldSpec spec;
  try {
    spec.fold = c.meta.value("fold", fallback_fold);
    spec.train_patients = c.meta.at("train_patients").get<std::vector<int>>();
    spec.val_patients = c.meta.at("val_patients").get<std::vector<int>>();
    spec.test_patients = c.meta.at("test_patients").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("checkpoint without split metadata: {}", e.what()));
  }
  return spec;
}

json confusion_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (int r = 0; r < cm.classes(); ++r) {
    json row = json::array();
    for (int c = 0; c < cm.classes(); ++c) row.push_back(cm.at(r, c));
    rows.push_back(row);
  }
  return rows;
}

std::vector<FloatImage> network_inputs(const std::vector<Image>& images, const EncoderConfig& enc) {
  std::vector<FloatImage> out;
  out.reserve(images.size());
  for (const auto& im : images) {
    out.push_back(center_resize(to_float(im), enc.input_height, enc.input_width));
  }
  return out;
}

}  // namespace

void run_gen(const GenArgs& args) {
  CohortConfig cfg = parse_section<CohortConfig>(load_config(args.config), "cohort config");
  override_with(args.seed, cfg.seed);
  override_with(args.patients, cfg.n_patients);
  override_with(args.visits, cfg.visits_per_patient);
  override_with(args.scans, cfg.scans_per_volume);
  override_with(args.height, cfg.image_height);
  override_with(args.width, cfg.image_width);
  override_with(args.tau, cfg.tau);
  override_with(args.flip_rate, cfg.flip_rate);
  override_with(args.other_rate, cfg.other_rate);
  cfg.validate();

  const fs::path out(args.out);
  prepare_run_dir(out, args.force);
  const auto cohort = gen_cohort(cfg, args.threads);
  const auto manifest = write_dataset(cohort, out);
  write_run_metadata(out, "gen", cfg, {});
  if (!args.quiet) {
    const auto ds = Dataset::from_cohort(cohort);
    std::fprintf(stderr, "wrote %zu pairs, %zu images to %s (%s)\n", ds.pairs.size(),
                 ds.images.size(), manifest.string().c_str(), histogram_text(ds).c_str());
  }
}

void run_train(const TrainArgs& args) {
  const json j = load_config(args.config);
  reject_unknown_keys(j, {"data", "folds", "holdout", "split_seed", "train"}, "train run config");
  TrainConfig tc;
  if (j.contains("train")) tc = parse_section<TrainConfig>(j.at("train"), "train config");
  std::string data;
  int folds = 5;
  double holdout = 0.15;
  std::uint64_t split_seed = 0;
  read_optional(j, "data", data, "train run config");
  read_optional(j, "folds", folds, "train run config");
  read_optional(j, "holdout", holdout, "train run config");
  read_optional(j, "split_seed", split_seed, "train run config");
  if (!args.data.empty()) data = args.data;
  override_with(args.folds, folds);
  override_with(args.holdout, holdout);
  override_with(args.split_seed, split_seed);
  override_with(args.seed, tc.seed);
  override_with(args.epochs, tc.epochs);
  override_with(args.batch_size, tc.batch_size);
  override_with(args.lr, tc.optimizer.lr);
  override_with(args.lambda, tc.lambda);
  if (args.alpha_lr) tc.alpha_lr = *args.alpha_lr;
  if (args.noise_estimation) tc.noise_estimation = true;
  if (args.naive_baseline) tc.model = ModelKind::kNaive;
  if (args.augment) tc.augment = true;
  tc.threads = args.threads;
  tc.validate();
  if (folds < 1) throw ConfigError("folds must be >= 1");
  if (data.empty()) throw ConfigError("no dataset given (use --data or \"data\" in the config)");
  if (!fs::is_regular_file(data)) throw ConfigError("dataset manifest not found: " + data);

  const Dataset dataset = load_dataset(data);
  const SplitPlan plan = split_patientwise(dataset, folds, holdout, split_seed);

  const fs::path out(args.out);
  prepare_run_dir(out, args.force);
  const json resolved = {{"data", fs::absolute(data).lexically_normal().generic_string()},
                         {"folds", folds},
                         {"holdout", holdout},
                         {"split_seed", split_seed},
                         {"train", tc}};
  std::vector<fs::path> inputs{data};
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    if (dataset.images.has_paths()) inputs.push_back(dataset.images.path(i));
  }
  write_run_metadata(out, "train", resolved, inputs);
  write_json_file(out / "split.json", plan);

  if (!args.quiet) {
    std::fprintf(stderr, "training %s model: %zu pairs (%s), %d folds, %zu test patients\n",
                 std::string(to_string(tc.model)).c_str(), dataset.pairs.size(),
                 histogram_text(dataset).c_str(), folds, plan.test_patients.size());
  }
  auto progress = [&](int fold, const EpochRecord& r) {
    if (args.quiet) return;
    std::fprintf(stderr, "fold %d epoch %3d  train %.4f  val %.4f (d %.4f, o %.4f)\n", fold,
                 r.epoch, r.train_loss, r.val_loss, r.val_bce_d, r.val_bce_o);
  };
  const CrossValidation cv = cross_validate(dataset, plan, tc, args.jobs, progress);

  std::string history = "fold," + history_csv({});
  std::vector<MetricSuite> suites;
  json folds_json = json::array();
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    const auto& fold = cv.folds[f];
    const fs::path dir = out / fmt::format("fold{}", f);
    fs::create_directories(dir);
    save_checkpoint(fold.best, dir / "checkpoint.json");
    const std::string rows = history_csv(fold.history);
    for (std::size_t pos = rows.find('\n') + 1; pos < rows.size();) {
      const std::size_t end = rows.find('\n', pos);
      history += fmt::format("{},{}\n", f, rows.substr(pos, end - pos));
      pos = end + 1;
    }
    suites.push_back(cv.reports[f].validation);
    folds_json.push_back({{"fold", f},
                          {"best_epoch", fold.best.epoch},
                          {"best_val_loss", fold.best.val_loss},
                          {"thresholds", cv.reports[f].thresholds},
                          {"validation", cv.reports[f].validation}});
  }
  write_text(out / "history.csv", history);
  write_text(out / "cv_metrics.csv", metrics_table_csv(suites));
  write_json_file(out / "summary.json",
                  {{"model", to_string(tc.model)},
                   {"noise_estimation", tc.noise_estimation},
                   {"folds", folds_json},
                   {"validation_mean", cv.aggregate.mean},
                   {"validation_std", cv.aggregate.std}});
  if (!args.quiet) {
    std::fprintf(stderr, "validation macro F1 %.4f +- %.4f, Rk %.4f +- %.4f\n",
                 cv.aggregate.mean.f1, cv.aggregate.std.f1, cv.aggregate.mean.rk,
                 cv.aggregate.std.rk);
  }
}

void run_eval(const EvalArgs& args) {
  const json j = load_config(args.config);
  reject_unknown_keys(j, {"run", "checkpoints", "data", "gamma_threshold", "oracle"},
                      "eval config");
  std::string run, data;
  std::vector<std::string> checkpoints;
  double gamma_threshold = 0.85;
  bool oracle = false;
  read_optional(j, "run", run, "eval config");
  read_optional(j, "checkpoints", checkpoints, "eval config");
  read_optional(j, "data", data, "eval config");
  read_optional(j, "gamma_threshold", gamma_threshold, "eval config");
  read_optional(j, "oracle", oracle, "eval config");
  if (!args.run.empty()) run = args.run;
  if (!args.checkpoints.empty()) checkpoints = args.checkpoints;
  if (!args.data.empty()) data = args.data;
  override_with(args.gamma_threshold, gamma_threshold);
  oracle = oracle || args.oracle;

  if (!run.empty()) {
    if (!fs::is_directory(run)) throw ConfigError("run directory not found: " + run);
    if (checkpoints.empty()) {
      for (int f = 0; fs::exists(fs::path(run) / fmt::format("fold{}", f)); ++f) {
        checkpoints.push_back((fs::path(run) / fmt::format("fold{}", f) / "checkpoint.json")
                                  .generic_string());
      }
    }
    if (data.empty()) {
      const json rc = read_json_file(fs::path(run) / "config.json");
      data = rc.at("config").value("data", std::string());
    }
  }
  if (checkpoints.empty()) throw ConfigError("no checkpoints given (use --run or --checkpoint)");
  for (const auto& c : checkpoints) {
    if (!fs::is_regular_file(c)) throw ConfigError("checkpoint not found: " + c);
  }
  if (data.empty()) throw ConfigError("no dataset given (use --data)");
  if (!fs::is_regular_file(data)) throw ConfigError("dataset manifest not found: " + data);
  if (!(gamma_threshold > 0.0)) throw ConfigError("gamma_threshold must be > 0");

  const Dataset dataset = load_dataset(data);
  const fs::path out(args.out);
  prepare_run_dir(out, args.force);
  std::vector<fs::path> inputs{data};
  for (const auto& c : checkpoints) inputs.emplace_back(c);
  write_run_metadata(out, "eval",
                     {{"run", run},
                      {"checkpoints", checkpoints},
                      {"data", data},
                      {"gamma_threshold", gamma_threshold},
                      {"oracle", oracle}},
                     inputs);

  std::vector<MetricSuite> suites;
  json folds_json = json::array();
  json gamma_json = json::array();
  for (std::size_t f = 0; f < checkpoints.size(); ++f) {
    const Checkpoint ckpt = load_checkpoint(checkpoints[f]);
    const FoldSpec spec = spec_from_meta(ckpt, static_cast<int>(f));
    const auto val = dataset.pair_indices(spec.val_patients);
    const auto test = dataset.pair_indices(spec.test_patients);
    if (val.empty() || test.empty()) {
      throw ConfigError(fmt::format("fold {}: split selects no validation or test pairs", f));
    }
    const auto val_labels = labels_of(dataset, val);
    const auto test_labels = labels_of(dataset, test);
    json fold_json = {{"fold", spec.fold}, {"checkpoint", checkpoints[f]},
                      {"kind", oracle ? "oracle" : to_string(ckpt.model.kind)},
                      {"n_test_pairs", test.size()}};

    std::optional<ConfusionMatrix> cm;
    if (oracle || ckpt.model.kind == ModelKind::kSiamese) {
      auto predict = [&](const std::vector<int>& idx) {
        return oracle ? oracle_predictions(dataset, idx)
                      : predict_pairs(ckpt.model, dataset, idx, args.threads);
      };
      auto split = [](const std::vector<PairPrediction>& p) {
        std::pair<std::vector<double>, std::vector<double>> r;
        for (const auto& x : p) {
          r.first.push_back(x.y_d);
          r.second.push_back(x.y_o);
        }
        return r;
      };
      const auto [vd, vo] = split(predict(val));
      const DecisionThresholds th = calibrate_boundary(vd, vo, val_labels);
      const auto test_pred = predict(test);
      const auto [td, to] = split(test_pred);
      cm = confusion_matrix(td, to, test_labels, th);
      fold_json["thresholds"] = th;
      write_text(out / fmt::format("delta_scatter_fold{}.csv", f),
                 delta_scatter_csv(dataset, test, test_pred));
      const bool noise = ckpt.config.value("noise_estimation", false);
      if (noise && !oracle) {
        json g = gamma_adjacency_report(ckpt.alpha, dataset,
                                        dataset.pair_indices(spec.train_patients),
                                        gamma_threshold);
        g["fold"] = spec.fold;
        gamma_json.push_back(g);
      }
    } else {
      cm = confusion_argmax(predict_naive(ckpt.model, dataset, test, args.threads), test_labels);
    }
    const MetricSuite suite = metric_suite(*cm);
    fold_json["confusion"] = confusion_json(*cm);
    fold_json["test"] = suite;
    folds_json.push_back(fold_json);
    suites.push_back(suite);
  }
  const auto agg = aggregate_metrics(suites);
  write_text(out / "metrics.csv", metrics_table_csv(suites));
  if (!gamma_json.empty()) write_json_file(out / "gamma_report.json", gamma_json);
  write_json_file(out / "summary.json",
                  {{"class_order", {"BETTER", "WORSE", "STABLE", "OTHER"}},
                   {"folds", folds_json},
                   {"test_mean", agg.mean},
                   {"test_std", agg.std}});
  std::fprintf(stderr, "test macro F1 %.4f +- %.4f, Rk %.4f +- %.4f, bal. acc %.4f +- %.4f\n",
               agg.mean.f1, agg.std.f1, agg.mean.rk, agg.std.rk, agg.mean.balanced_accuracy,
               agg.std.balanced_accuracy);
}

void run_fewshot(const FewshotArgs& args) {
  const json j = load_config(args.config);
  reject_unknown_keys(j, {"activity", "ks", "repetitions", "seed", "ridge", "checkpoints"},
                      "fewshot config");
  ActivityConfig activity;
  if (j.contains("activity")) {
    activity = parse_section<ActivityConfig>(j.at("activity"), "activity config");
  }
  std::vector<int> ks{1, 2, 4, 8, 16};
  int repetitions = 20;
  std::uint64_t seed = 0;
  double ridge = 1.0;
  std::map<std::string, std::string> ckpts;
  read_optional(j, "ks", ks, "fewshot config");
  read_optional(j, "repetitions", repetitions, "fewshot config");
  read_optional(j, "seed", seed, "fewshot config");
  read_optional(j, "ridge", ridge, "fewshot config");
  if (j.contains("checkpoints")) {
    reject_unknown_keys(j.at("checkpoints"), {"ours", "ours_noise", "naive"},
                        "fewshot config checkpoints");
    read_optional(j, "checkpoints", ckpts, "fewshot config");
  }
  if (!args.ks.empty()) ks = args.ks;
  override_with(args.repetitions, repetitions);
  override_with(args.seed, seed);
  override_with(args.images, activity.n_images);
  if (!args.ours.empty()) ckpts["ours"] = args.ours;
  if (!args.ours_noise.empty()) ckpts["ours_noise"] = args.ours_noise;
  if (!args.naive.empty()) ckpts["naive"] = args.naive;
  activity.validate();
  if (ks.empty()) throw ConfigError("fewshot: empty k list");
  for (int k : ks) {
    if (k < 1) throw ConfigError("fewshot: k must be >= 1");
  }
  if (repetitions < 1) throw ConfigError("fewshot: repetitions must be >= 1");
  if (!(ridge > 0.0)) throw ConfigError("fewshot: ridge must be > 0");
  if (ckpts.empty()) throw ConfigError("fewshot: no checkpoints (use --ours, --ours-noise, --naive)");
  for (const auto& [name, path] : ckpts) {
    if (!fs::is_regular_file(path)) throw ConfigError("checkpoint not found: " + path);
  }

  const fs::path out(args.out);
  prepare_run_dir(out, args.force);
  std::vector<fs::path> inputs;
  for (const auto& [name, path] : ckpts) inputs.emplace_back(path);
  write_run_metadata(out, "fewshot",
                     {{"activity", activity},
                      {"ks", ks},
                      {"repetitions", repetitions},
                      {"seed", seed},
                      {"ridge", ridge},
                      {"checkpoints", ckpts}},
                     inputs);

  const ActivitySet set = gen_activity_set(activity);
  std::vector<NamedCurve> curves;
  json summary = json::object();
  const std::vector<std::pair<std::string, std::string>> order{
      {"ours", "ours"}, {"ours_noise", "ours+noise"}, {"naive", "naive-logistic"}};
  for (const auto& [key, label] : order) {
    auto it = ckpts.find(key);
    if (it == ckpts.end()) continue;
    const Checkpoint ckpt = load_checkpoint(it->second);
    const auto inputs_f = network_inputs(set.images, ckpt.model.encoder);
    NamedCurve curve{label, {}};
    json entry = {{"checkpoint", it->second}};
    if (key == "naive") {
      const auto x = feature_matrix(ckpt.model, inputs_f, args.threads);
      curve.points = fewshot_curve_logistic(x, set.labels, ks, repetitions, seed, ridge);
    } else {
      if (ckpt.model.kind != ModelKind::kSiamese) {
        throw ConfigError(fmt::format("fewshot: '{}' must be a siamese checkpoint", key));
      }
      const auto z = disease_logits(ckpt.model, inputs_f, args.threads);
      const ThresholdRule full = optimal_threshold(z, set.labels);
      entry["full_data_threshold"] = full.threshold;
      entry["full_data_orientation"] = full.orientation;
      entry["full_data_bal_acc"] = full.fit_balanced_accuracy;
      curve.points = fewshot_curve(z, set.labels, ks, repetitions, seed);
    }
    json pts = json::array();
    for (const auto& p : curve.points) pts.push_back({{"k", p.k}, {"mean", p.mean}, {"std", p.std}});
    entry["curve"] = pts;
    summary[label] = entry;
    curves.push_back(std::move(curve));
  }
  write_text(out / "fewshot.csv", curve_csv(curves));
  write_json_file(out / "summary.json", summary);
  for (const auto& c : curves) {
    std::string line;
    for (const auto& p : c.points) line += fmt::format(" k={}:{:.3f}", p.k, p.mean);
    std::fprintf(stderr, "%-15s%s\n", c.model.c_str(), line.c_str());
  }
}

void run_inspect(const InspectArgs& args) {
  const Checkpoint c = load_checkpoint(args.checkpoint);
  const auto& a = c.alpha.values();
  json alpha = {{"size", a.size()}};
  if (!a.empty()) {
    const auto nonzero = std::count_if(a.begin(), a.end(), [](double v) { return v != 0.0; });
    const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
    alpha["nonzero"] = nonzero;
    alpha["min"] = *lo;
    alpha["max"] = *hi;
  }
  json j = {{"format", kCheckpointFormat},
            {"version", kCheckpointVersion},
            {"kind", to_string(c.model.kind)},
            {"encoder", c.model.encoder},
            {"param_count", c.model.values.size()},
            {"epoch", c.epoch},
            {"val_loss", c.val_loss},
            {"alpha", alpha},
            {"config", c.config},
            {"meta", c.meta}};
  if (args.params) j["params"] = c.model.values;
  std::printf("%s\n", j.dump(2).c_str());
}

}  // namespace progstate::cli
