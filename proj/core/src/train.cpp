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

#include "progstate/train.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>

#include <fmt/format.h>

#include "progstate/errors.hpp"
#include "progstate/json_util.hpp"
#include "progstate/objective.hpp"
#include "progstate/parallel.hpp"

namespace progstate {

void TrainConfig::validate() const {
  encoder.validate();
  if (!(optimizer.lr > 0.0)) throw ConfigError("train config: lr must be > 0");
  if (!(optimizer.weight_decay >= 0.0)) throw ConfigError("train config: weight_decay must be >= 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw ConfigError("train config: betas must lie in [0, 1)");
  }
  if (!(optimizer.eps > 0.0)) throw ConfigError("train config: eps must be > 0");
  if (alpha_lr && !(*alpha_lr > 0.0)) throw ConfigError("train config: alpha_lr must be > 0");
  if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("train config: lambda must be >= 0");
  if (threads < 1) throw ConfigError("train config: threads must be >= 1");
  if (augment) {
    augmentation.validate();
    if (augmentation.out_height != encoder.input_height ||
        augmentation.out_width != encoder.input_width) {
      throw ConfigError("train config: augmentation output size must equal the encoder input");
    }
  }
  if (noise_estimation && model != ModelKind::kSiamese) {
    throw ConfigError("train config: noise_estimation requires the siamese model");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"model", to_string(c.model)},
                     {"encoder", c.encoder},
                     {"augment", c.augment},
                     {"augmentation", c.augmentation},
                     {"optimizer", c.optimizer},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"lambda", c.lambda},
                     {"noise_estimation", c.noise_estimation},
                     {"seed", c.seed}};
  j["alpha_lr"] = c.alpha_lr ? nlohmann::json(*c.alpha_lr) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  constexpr std::string_view ctx = "train config";
  reject_unknown_keys(j,
                      {"model", "encoder", "augment", "augmentation", "optimizer", "alpha_lr",
                       "epochs", "batch_size", "lambda", "noise_estimation", "seed"},
                      ctx);
  if (j.contains("model")) {
    std::string m;
    read_optional(j, "model", m, ctx);
    const auto kind = parse_model_kind(m);
    if (!kind) throw ConfigError("train config: model must be 'siamese' or 'naive'");
    c.model = *kind;
  }
  if (j.contains("encoder")) c.encoder = j.at("encoder").get<EncoderConfig>();
  if (j.contains("augmentation")) c.augmentation = j.at("augmentation").get<AugmentParams>();
  if (j.contains("optimizer")) c.optimizer = j.at("optimizer").get<AdamWParams>();
  read_optional(j, "augment", c.augment, ctx);
  if (j.contains("alpha_lr")) {
    if (j.at("alpha_lr").is_null()) {
      c.alpha_lr.reset();
    } else {
      double a = 0.0;
      read_optional(j, "alpha_lr", a, ctx);
      c.alpha_lr = a;
    }
  }
  read_optional(j, "epochs", c.epochs, ctx);
  read_optional(j, "batch_size", c.batch_size, ctx);
  read_optional(j, "lambda", c.lambda, ctx);
  read_optional(j, "noise_estimation", c.noise_estimation, ctx);
  read_optional(j, "seed", c.seed, ctx);
}

std::array<double, 3> validation_loss(const ModelParams& params, const Dataset& dataset,
                                      std::span<const int> pair_indices, unsigned threads) {
  if (pair_indices.empty()) throw ConfigError("validation_loss: no pairs");
  double sum_d = 0.0, sum_o = 0.0;
  if (params.kind == ModelKind::kSiamese) {
    const auto preds = predict_pairs(params, dataset, pair_indices, threads);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const auto& p = preds[i];
      const auto l = pair_loss({p.z_d1, p.z_d2, p.z_o1, p.z_o2, 0.0},
                               encode_target(dataset.pairs[pair_indices[i]].label), 0.0);
      sum_d += l.bce_d;
      sum_o += l.bce_o;
    }
  } else {
    const auto probs = predict_naive(params, dataset, pair_indices, threads);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const double p = probs[i][index_of(dataset.pairs[pair_indices[i]].label)];
      sum_d -= std::log(std::max(p, kProbClamp));
    }
  }
  const double n = static_cast<double>(pair_indices.size());
  return {(sum_d + sum_o) / n, sum_d / n, sum_o / n};
}

namespace {

struct PairTerms {
  double total = 0.0;
  double bce_d = 0.0;
  double bce_o = 0.0;
  double reg = 0.0;
  double d_alpha = 0.0;
};

class Trainer {
 public:
  Trainer(const Dataset& dataset, const FoldSpec& fold, const TrainConfig& config)
      : dataset_(dataset), fold_(fold), config_(config) {
    config_.validate();
    train_ = dataset.pair_indices(fold.train_patients);
    val_ = dataset.pair_indices(fold.val_patients);
    if (train_.empty()) throw ConfigError(fmt::format("fold {}: no training pairs", fold.fold));
    if (val_.empty()) throw ConfigError(fmt::format("fold {}: no validation pairs", fold.fold));
    const auto& enc = config_.encoder;
    if (config_.augment) {
      inputs_.reserve(dataset.images.size());
      for (std::size_t i = 0; i < dataset.images.size(); ++i) {
        inputs_.push_back(to_float(dataset.images.at(i)));
      }
    } else {
      inputs_ = float_images(dataset.images, enc.input_height, enc.input_width);
    }
    if (config_.model == ModelKind::kSiamese) {
      siamese_.emplace(enc);
    } else {
      naive_.emplace(enc);
    }
  }

  FoldResult run(const EpochCallback& on_epoch) {
    const std::uint64_t base = derive_seed(config_.seed, static_cast<std::uint64_t>(fold_.fold));
    Rng init_rng(derive_seed(base, 1));
    Rng sampler_rng(derive_seed(base, 2));
    Rng augment_rng(derive_seed(base, 3));

    ModelParams params = siamese_ ? siamese_->init(init_rng) : naive_->init(init_rng);
    AlphaTable alpha(static_cast<std::size_t>(std::max(dataset_.max_pair_id() + 1, 0)));
    const std::size_t n_params = params.values.size();
    AdamW optimizer(n_params, config_.optimizer);
    AdamWParams alpha_opt_params = config_.optimizer;
    alpha_opt_params.lr = config_.effective_alpha_lr();
    alpha_opt_params.weight_decay = 0.0;
    AdamW alpha_optimizer(alpha.size(), alpha_opt_params);

    std::vector<Progression> train_labels;
    for (int i : train_) train_labels.push_back(dataset_.pairs[i].label);
    const BalancedSampler sampler(train_labels);

    const std::size_t batch = static_cast<std::size_t>(config_.batch_size);
    std::vector<std::vector<double>> slot_grads(batch, std::vector<double>(n_params));
    std::vector<EncoderCache> caches(2 * batch);
    std::vector<PairTerms> terms(batch);
    std::vector<std::pair<FloatImage, FloatImage>> augmented(batch);
    std::vector<double> grad(n_params);
    std::vector<double> alpha_grad(alpha.size());

    FoldResult result;
    result.spec = fold_;
    double best_val = std::numeric_limits<double>::infinity();
    const std::size_t n = train_.size();

    for (int epoch = 1; epoch <= config_.epochs; ++epoch) {
      const auto draws = sampler.draw(n, sampler_rng);
      EpochRecord rec;
      rec.epoch = epoch;
      for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
        const std::size_t bs = std::min(batch, n - start);
        std::vector<const PairSample*> samples(bs);
        for (std::size_t s = 0; s < bs; ++s) {
          samples[s] = &dataset_.pairs[train_[draws[start + s]]];
          if (config_.augment) {
            augmented[s] = augment_pair(inputs_[samples[s]->img1], inputs_[samples[s]->img2],
                                        config_.augmentation, augment_rng);
          }
        }
        parallel_for(bs, config_.threads, [&](std::size_t s) {
          const FloatImage& a = config_.augment ? augmented[s].first : inputs_[samples[s]->img1];
          const FloatImage& c = config_.augment ? augmented[s].second : inputs_[samples[s]->img2];
          auto& g = slot_grads[s];
          std::fill(g.begin(), g.end(), 0.0);
          terms[s] = pair_step(params, alpha, *samples[s], a, c, caches[2 * s], caches[2 * s + 1], g);
        });

        std::fill(grad.begin(), grad.end(), 0.0);
        double batch_loss = 0.0;
        for (std::size_t s = 0; s < bs; ++s) {
          for (std::size_t k = 0; k < n_params; ++k) grad[k] += slot_grads[s][k];
          batch_loss += terms[s].total;
          rec.train_loss += terms[s].total;
          rec.train_bce_d += terms[s].bce_d;
          rec.train_bce_o += terms[s].bce_o;
          rec.train_reg += terms[s].reg;
        }
        if (!std::isfinite(batch_loss)) {
          throw NumericalError(fmt::format("fold {}: non-finite training loss at epoch {}, batch {}",
                                           fold_.fold, epoch, b));
        }
        const double inv = 1.0 / static_cast<double>(bs);
        for (double& v : grad) v *= inv;
        optimizer.step(params.values, grad);
        if (config_.noise_estimation) {
          std::fill(alpha_grad.begin(), alpha_grad.end(), 0.0);
          for (std::size_t s = 0; s < bs; ++s) {
            alpha_grad[samples[s]->pair_id] += terms[s].d_alpha * inv;
          }
          alpha_optimizer.step(alpha.values(), alpha_grad);
        }
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      rec.train_loss *= inv_n;
      rec.train_bce_d *= inv_n;
      rec.train_bce_o *= inv_n;
      rec.train_reg *= inv_n;
      const auto val = validation_loss(params, dataset_, val_, config_.threads);
      rec.val_loss = val[0];
      rec.val_bce_d = val[1];
      rec.val_bce_o = val[2];
      if (!std::isfinite(rec.val_loss)) {
        throw NumericalError(
            fmt::format("fold {}: non-finite validation loss at epoch {}", fold_.fold, epoch));
      }
      result.history.push_back(rec);
      if (rec.val_loss < best_val) {
        best_val = rec.val_loss;
        result.best = make_checkpoint(params, alpha, rec);
      }
      if (on_epoch) on_epoch(rec);
    }
    result.last = make_checkpoint(params, alpha, result.history.back());
    return result;
  }

 private:
  PairTerms pair_step(const ModelParams& params, const AlphaTable& alpha, const PairSample& pair,
                      const FloatImage& img1, const FloatImage& img2, EncoderCache& c1,
                      EncoderCache& c2, std::vector<double>& g) const {
    PairTerms t;
    if (siamese_) {
      const auto l1 = siamese_->encode(params.values, img1, c1);
      const auto l2 = siamese_->encode(params.values, img2, c2);
      const double a = config_.noise_estimation ? alpha.alpha(pair.pair_id) : 0.0;
      const double lambda = config_.noise_estimation ? config_.lambda : 0.0;
      const auto loss =
          pair_loss({l1.z_d, l2.z_d, l1.z_o, l2.z_o, a}, encode_target(pair.label), lambda);
      siamese_->backward(params.values, c1, loss.d_zd1, loss.d_zo1, g);
      siamese_->backward(params.values, c2, loss.d_zd2, loss.d_zo2, g);
      t = {loss.total, loss.bce_d, loss.bce_o, loss.reg, loss.d_alpha};
    } else {
      naive_->encoder().forward(params.values, img1, c1);
      naive_->encoder().forward(params.values, img2, c2);
      const auto ce = categorical_cross_entropy(naive_->logits(params.values, c1, c2), pair.label);
      naive_->backward(params.values, c1, c2, ce.d_logits, g);
      t.total = ce.loss;
      t.bce_d = ce.loss;
    }
    return t;
  }

  Checkpoint make_checkpoint(const ModelParams& params, const AlphaTable& alpha,
                             const EpochRecord& rec) const {
    Checkpoint c;
    c.model = params;
    c.alpha = alpha;
    c.epoch = rec.epoch;
    c.val_loss = rec.val_loss;
    c.config = config_;
    c.meta = {{"fold", fold_.fold},
              {"train_patients", fold_.train_patients},
              {"val_patients", fold_.val_patients},
              {"test_patients", fold_.test_patients}};
    return c;
  }

  const Dataset& dataset_;
  FoldSpec fold_;
  TrainConfig config_;
  std::vector<int> train_;
  std::vector<int> val_;
  std::vector<FloatImage> inputs_;
  std::optional<SiameseNet> siamese_;
  std::optional<NaiveNet> naive_;
};

}  // namespace

FoldResult train_fold(const Dataset& dataset, const FoldSpec& fold, const TrainConfig& config,
                      const EpochCallback& on_epoch) {
  Trainer trainer(dataset, fold, config);
  return trainer.run(on_epoch);
}

FoldReport evaluate_fold(const Dataset& dataset, const FoldResult& fold, unsigned threads) {
  const auto val = dataset.pair_indices(fold.spec.val_patients);
  const auto labels = labels_of(dataset, val);
  FoldReport report;
  report.fold = fold.spec.fold;
  const auto& model = fold.best.model;
  if (model.kind == ModelKind::kSiamese) {
    const auto preds = predict_pairs(model, dataset, val, threads);
    std::vector<double> y_d, y_o;
    for (const auto& p : preds) {
      y_d.push_back(p.y_d);
      y_o.push_back(p.y_o);
    }
    report.thresholds = calibrate_boundary(y_d, y_o, labels);
    report.validation = metric_suite(confusion_matrix(y_d, y_o, labels, report.thresholds));
  } else {
    const auto probs = predict_naive(model, dataset, val, threads);
    report.validation = metric_suite(confusion_argmax(probs, labels));
  }
  return report;
}

CrossValidation cross_validate(const Dataset& dataset, const SplitPlan& plan,
                               const TrainConfig& config, unsigned jobs,
                               const std::function<void(int, const EpochRecord&)>& on_epoch) {
  config.validate();
  const int n = plan.n_folds();
  if (n < 1) throw ConfigError("cross_validate: plan has no folds");
  CrossValidation cv;
  cv.folds.resize(n);
  std::mutex mu;
  std::vector<std::exception_ptr> errors(n);
  parallel_for(static_cast<std::size_t>(n), std::max(jobs, 1u), [&](std::size_t f) {
    try {
      EpochCallback cb;
      if (on_epoch) {
        cb = [&, f](const EpochRecord& r) {
          std::lock_guard lock(mu);
          on_epoch(static_cast<int>(f), r);
        };
      }
      cv.folds[f] = train_fold(dataset, plan.fold(static_cast<int>(f)), config, cb);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  });
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<MetricSuite> suites;
  for (const auto& fold : cv.folds) {
    cv.reports.push_back(evaluate_fold(dataset, fold, config.threads));
    suites.push_back(cv.reports.back().validation);
  }
  cv.aggregate = aggregate_metrics(suites);
  return cv;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out =
      "epoch,train_loss,train_bce_d,train_bce_o,train_reg,val_loss,val_bce_d,val_bce_o\n";
  for (const auto& r : history) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.epoch, format_double(r.train_loss),
                       format_double(r.train_bce_d), format_double(r.train_bce_o),
                       format_double(r.train_reg), format_double(r.val_loss),
                       format_double(r.val_bce_d), format_double(r.val_bce_o));
  }
  return out;
}

}  // namespace progstate
