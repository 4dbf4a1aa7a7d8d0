//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "confdiff/datakit.hpp"
#include "confdiff/denoiser.hpp"
#include "confdiff/diffcore.hpp"
#include "confdiff/objective.hpp"
#include "confdiff/schedule.hpp"

namespace confdiff {

struct RunConfig {
  std::string schedule_preset = "desk";
  std::optional<int> steps;  // overrides of the preset
  std::optional<double> beta_1;
  std::optional<double> beta_T;
  double sigmoid_shape = 6.0;

  DenoiserConfig model;
  TargetKind objective = TargetKind::kAligned;
  Weighting weighting = Weighting::kUnit;
  diff::AdamOptions optimizer;
  /// When set, the step size follows a half cosine from optimizer.lr down to
  /// this value over `iterations` steps and stays there afterwards.
  std::optional<double> lr_final;
  int batch_size = 32;
  int iterations = 2000;
  std::uint64_t seed = 0;
  int checkpoint_every = 500;

  std::string dataset;
  std::string output_dir = "run";

  /// "desk" (default), "paper-qm9" or "paper-drugs".
  static RunConfig preset(std::string_view name);

  VarianceSchedule schedule() const;
  /// Step size used for the update that follows `completed` finished steps.
  double learning_rate(std::int64_t completed) const;
  /// True for the schedules and budgets sized for accelerator-class hardware.
  bool paper_scale() const;
  void validate() const;
};

/// Versioned JSON document holding every field.
std::string run_config_to_json(const RunConfig &config);

/// Keys present in `text` override `base`; unknown keys are rejected.
RunConfig run_config_from_json(std::string_view text, const RunConfig &base = {});

/// Hash of the canonical serialization.
std::string config_fingerprint(const RunConfig &config);

struct LossRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  double wall_seconds = 0.0;
};

/// Single-threaded trainer: uniform molecule, conformer and step t per
/// example, adaptive-moment update per batch. All randomness flows from one
/// engine whose state is checkpointed.
class Trainer {
 public:
  Trainer(RunConfig config, std::vector<DatasetRecord> records);

  /// Restores parameters, optimizer moments, step counter and rng state.
  static Trainer resume(const Checkpoint &ckpt, std::vector<DatasetRecord> records);

  LossRecord step();

  /// Fixed set of examples (seeded independently of training) for comparing
  /// the loss before and after training.
  std::vector<TrainingExample> evaluation_batch(int size, std::uint64_t seed) const;
  double evaluate(std::span<const TrainingExample> batch) const;

  Checkpoint checkpoint() const;
  const RunConfig &config() const { return config_; }
  const DenoiserModel &model() const { return model_; }
  const VarianceSchedule &schedule() const { return schedule_; }
  std::int64_t steps_done() const { return model_.params.step(); }

 private:
  TrainingExample draw_example(Rng &rng) const;

  RunConfig config_;
  VarianceSchedule schedule_;
  std::vector<DatasetRecord> records_;  // training split only
  DenoiserModel model_;
  Rng rng_;
  double elapsed_ = 0.0;
};

/// Rebuilds the model stored in a checkpoint.
DenoiserModel model_from_checkpoint(const Checkpoint &ckpt);

}  // namespace confdiff
