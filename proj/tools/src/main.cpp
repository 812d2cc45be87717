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

#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "commands.hpp"
#include "progstate/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace progstate::cli;
  CLI::App app{"progstate: disease-state learning from ordinal pair labels"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic cohort dataset");
  g->add_option("--config", gen.config, "JSON cohort configuration")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output dataset directory")->required();
  g->add_flag("--force", gen.force, "Overwrite a non-empty output directory");
  g->add_flag("--quiet", gen.quiet, "Suppress progress output");
  g->add_option("--threads", gen.threads, "Worker threads")->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--patients", gen.patients, "Number of patients");
  g->add_option("--visits", gen.visits, "Visits per patient");
  g->add_option("--scans", gen.scans, "B-scans per volume");
  g->add_option("--height", gen.height, "Image height");
  g->add_option("--width", gen.width, "Image width");
  g->add_option("--tau", gen.tau, "Stable half-width in severity units");
  g->add_option("--flip-rate", gen.flip_rate, "Label flip probability");
  g->add_option("--other-rate", gen.other_rate, "Corrupted pair probability");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Cross-validated training");
  t->add_option("--config", train.config, "JSON run configuration")->check(CLI::ExistingFile);
  t->add_option("--data", train.data, "Dataset manifest (manifest.jsonl)");
  t->add_option("--out", train.out, "Run directory")->required();
  t->add_flag("--force", train.force, "Overwrite a non-empty run directory");
  t->add_flag("--quiet", train.quiet, "Suppress progress output");
  t->add_option("--threads", train.threads, "Worker threads per fold")->check(CLI::PositiveNumber);
  t->add_option("--jobs", train.jobs, "Folds trained concurrently")->check(CLI::PositiveNumber);
  t->add_option("--folds", train.folds, "Number of folds");
  t->add_option("--holdout", train.holdout, "Fraction of patients held out for testing");
  t->add_option("--split-seed", train.split_seed, "Seed of the patient split");
  t->add_option("--seed", train.seed, "Training seed");
  t->add_option("--epochs", train.epochs, "Epochs");
  t->add_option("--batch-size", train.batch_size, "Batch size");
  t->add_option("--lr", train.lr, "Learning rate");
  t->add_option("--alpha-lr", train.alpha_lr, "Learning rate of the per-pair slopes");
  t->add_option("--lambda", train.lambda, "Slope regulariser weight");
  t->add_flag("--noise-estimation", train.noise_estimation, "Learn per-pair slopes");
  t->add_flag("--naive-baseline", train.naive_baseline, "Train the 4-class comparator");
  t->add_flag("--augment", train.augment, "Enable paired crop and flip augmentation");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate trained folds on held-out patients");
  e->add_option("--config", eval.config, "JSON evaluation configuration")
      ->check(CLI::ExistingFile);
  e->add_option("--run", eval.run, "Training run directory")->check(CLI::ExistingDirectory);
  e->add_option("--checkpoint", eval.checkpoints, "Checkpoint file (repeatable)")
      ->check(CLI::ExistingFile);
  e->add_option("--data", eval.data, "Dataset manifest (defaults to the run's)");
  e->add_option("--out", eval.out, "Evaluation output directory")->required();
  e->add_flag("--force", eval.force, "Overwrite a non-empty output directory");
  e->add_flag("--oracle", eval.oracle, "Replace model outputs by the stored labels");
  e->add_option("--threads", eval.threads, "Worker threads")->check(CLI::PositiveNumber);
  e->add_option("--gamma-threshold", eval.gamma_threshold, "Slope threshold of the report");

  FewshotArgs fewshot;
  auto* f = app.add_subcommand("fewshot", "Few-shot threshold curves on the activity task");
  f->add_option("--config", fewshot.config, "JSON few-shot configuration")
      ->check(CLI::ExistingFile);
  f->add_option("--ours", fewshot.ours, "Checkpoint of the plain model")->check(CLI::ExistingFile);
  f->add_option("--ours-noise", fewshot.ours_noise, "Checkpoint of the noise-estimation model")
      ->check(CLI::ExistingFile);
  f->add_option("--naive", fewshot.naive, "Checkpoint of the naive comparator")
      ->check(CLI::ExistingFile);
  f->add_option("--out", fewshot.out, "Output directory")->required();
  f->add_flag("--force", fewshot.force, "Overwrite a non-empty output directory");
  f->add_option("--threads", fewshot.threads, "Worker threads")->check(CLI::PositiveNumber);
  f->add_option("--k", fewshot.ks, "Shots per class (repeatable)");
  f->add_option("--repetitions", fewshot.repetitions, "Repetitions per k");
  f->add_option("--seed", fewshot.seed, "Shot-draw seed");
  f->add_option("--images", fewshot.images, "Size of the activity set");

  InspectArgs inspect;
  auto* i = app.add_subcommand("inspect", "Print checkpoint metadata");
  i->add_option("checkpoint", inspect.checkpoint, "Checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  i->add_flag("--params", inspect.params, "Include the parameter vector");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForVersion& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  try {
    if (*g) run_gen(gen);
    if (*t) run_train(train);
    if (*e) run_eval(eval);
    if (*f) run_fewshot(fewshot);
    if (*i) run_inspect(inspect);
  } catch (const progstate::ConfigError& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  } catch (const progstate::IoError& err) {
    std::fprintf(stderr, "I/O error: %s\n", err.what());
    return kExitIo;
  } catch (const progstate::FormatError& err) {
    std::fprintf(stderr, "format error: %s\n", err.what());
    return kExitIo;
  } catch (const progstate::NumericalError& err) {
    std::fprintf(stderr, "numerical error: %s\n", err.what());
    return kExitNumerical;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitIo;
  }
  return kExitOk;
}
