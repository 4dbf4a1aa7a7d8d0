//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "confdiff/datakit.hpp"
#include "confdiff/metrics.hpp"
#include "confdiff/sampler.hpp"
#include "confdiff/train.hpp"
#include "confdiff/verify.hpp"

namespace confdiff {

struct TrainOutcome {
  std::filesystem::path checkpoint;  // final checkpoint
  std::filesystem::path loss_log;
  std::int64_t steps = 0;
  double baseline_loss = 0.0;  // held-out batch loss before the first update
  double final_loss = 0.0;     // same batch after the last update
};

/// Trains `config` (or continues `resume_from`) until `config.iterations`
/// updates are done. Writes `<output_dir>/loss.csv`, `ckpt-<step>.bin` every
/// `checkpoint_every` updates, `checkpoint.bin` and `config.json`.
TrainOutcome cmd_train(const RunConfig &config, std::ostream &log,
                       const std::optional<std::filesystem::path> &resume_from = std::nullopt);

struct SampleOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path graphs;  // dataset file; graphs and reference counts come from here
  std::optional<std::string> split;  // restrict to one split of the graph file
  std::optional<int> count;  // conformers per molecule; defaults to 2x the reference count
  std::uint64_t seed = 0;
  SigmaMode sigma_mode = SigmaMode::kPosterior;
  std::optional<double> clip;
  std::filesystem::path output = "samples.jsonl";
};

/// Writes the generated conformers to `output` and a manifest to
/// `<output>.manifest.json`. Returns the number of conformers written.
std::int64_t cmd_sample(const SampleOptions &options, std::ostream &log);

struct EvalOptions {
  std::filesystem::path generated;
  std::filesystem::path reference;
  std::optional<std::string> reference_split;
  double delta = 0.5;
  double generation_ratio = 2.0;
  bool allow_any_ratio = false;
  std::optional<std::filesystem::path> csv;
  std::optional<std::filesystem::path> json;
};

MetricsReport cmd_eval(const EvalOptions &options, std::ostream &log);

struct GenDataOptions {
  ToySpec spec;
  std::uint64_t seed = 0;
  std::filesystem::path output = "toy.jsonl";
  std::optional<std::filesystem::path> modes;  // defaults to `<output>.modes.jsonl`
};

void cmd_gen_data(const GenDataOptions &options, std::ostream &log);

/// Prints the ledger and returns whether every check passed.
bool cmd_verify(const verify::SuiteOptions &options, std::ostream &log);

}  // namespace confdiff
