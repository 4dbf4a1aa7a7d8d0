//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "confdiff/allocator.hpp"
#include "confdiff/commands.hpp"
#include "confdiff/errors.hpp"

namespace {

using namespace confdiff;

template <typename T>
void override_with(const std::optional<T> &flag, T &field) {
  if (flag)
    field = *flag;
}

struct TrainFlags {
  std::string preset = "desk";
  std::optional<std::string> config_file, data, out, schedule, objective, weighting, output_mode,
      resume;
  std::optional<int> steps, iterations, batch_size, checkpoint_every, hidden_dim, encoder_layers,
      gfn_layers;
  std::optional<double> beta_1, beta_T, lr, lr_final, radius;
  std::optional<std::uint64_t> seed;

  RunConfig resolve() const {
    RunConfig c = RunConfig::preset(preset);
    if (config_file)
      c = run_config_from_json(read_text_file(*config_file), c);
    override_with(data, c.dataset);
    override_with(out, c.output_dir);
    override_with(schedule, c.schedule_preset);
    if (steps)
      c.steps = *steps;
    if (beta_1)
      c.beta_1 = *beta_1;
    if (beta_T)
      c.beta_T = *beta_T;
    if (objective)
      c.objective = target_kind_from_name(*objective);
    if (weighting)
      c.weighting = weighting_from_name(*weighting);
    if (output_mode)
      c.model.output_mode = *output_mode == "absolute" ? OutputMode::kAbsolute
                            : *output_mode == "residual"
                                ? OutputMode::kResidual
                                : throw InvalidInput("unknown output mode '" + *output_mode + "'");
    override_with(iterations, c.iterations);
    override_with(batch_size, c.batch_size);
    override_with(checkpoint_every, c.checkpoint_every);
    override_with(hidden_dim, c.model.hidden_dim);
    override_with(encoder_layers, c.model.encoder_layers);
    override_with(gfn_layers, c.model.gfn_layers);
    override_with(radius, c.model.radius);
    override_with(lr, c.optimizer.lr);
    if (lr_final)
      c.lr_final = *lr_final;
    override_with(seed, c.seed);
    return c;
  }
};

}  // namespace

int main(int argc, char **argv) {
  retain_freed_memory();
  CLI::App app{"Equivariant diffusion for molecular conformations"};
  app.require_subcommand(1);

  TrainFlags tf;
  auto *train = app.add_subcommand("train", "Train a denoiser; writes checkpoints and loss.csv");
  train->add_option("--preset", tf.preset, "Run preset: desk, paper-qm9, paper-drugs")
      ->capture_default_str();
  train->add_option("--config", tf.config_file, "JSON run config (explicit flags win)");
  train->add_option("--data", tf.data, "Dataset file (JSONL)");
  train->add_option("--out", tf.out, "Output directory [run]");
  train->add_option("--schedule", tf.schedule, "Schedule preset: desk, paper-default, paper-ablation");
  train->add_option("--steps", tf.steps, "Override number of diffusion steps T");
  train->add_option("--beta1", tf.beta_1, "Override first beta");
  train->add_option("--betaT", tf.beta_T, "Override last beta");
  train->add_option("--objective", tf.objective, "aligned | chainrule [aligned]");
  train->add_option("--weighting", tf.weighting, "unit | elbo [unit]");
  train->add_option("--output-mode", tf.output_mode, "residual | absolute [residual]");
  train->add_option("--iterations", tf.iterations, "Optimizer updates [2000]");
  train->add_option("--batch-size", tf.batch_size, "Examples per update [32]");
  train->add_option("--checkpoint-every", tf.checkpoint_every, "Updates between checkpoints [500]");
  train->add_option("--hidden", tf.hidden_dim, "Hidden width [128]");
  train->add_option("--encoder-layers", tf.encoder_layers, "Invariant encoder blocks [4]");
  train->add_option("--gfn-layers", tf.gfn_layers, "Equivariant layers [4]");
  train->add_option("--radius", tf.radius, "Neighbor cutoff [10]");
  train->add_option("--lr", tf.lr, "Learning rate [1e-3]");
  train->add_option("--lr-final", tf.lr_final,
                    "Anneal the learning rate along a half cosine to this value [off]");
  train->add_option("--seed", tf.seed, "Random seed [0]");
  train->add_option("--resume", tf.resume, "Continue from a checkpoint");
  train->add_flag_function(
      "--print-config",
      [&](std::int64_t) {
        std::cout << run_config_to_json(tf.resolve());
        std::exit(0);
      },
      "Print the resolved config and exit");

  SampleOptions so;
  std::string sigma = "posterior";
  auto *sample = app.add_subcommand("sample", "Draw conformers for every graph in a dataset file");
  sample->add_option("--checkpoint", so.checkpoint, "Trained checkpoint")->required();
  sample->add_option("--graphs", so.graphs, "Dataset file supplying the graphs")->required();
  sample->add_option("--split", so.split, "Only molecules of this split");
  sample->add_option("--count", so.count, "Conformers per molecule [2x references]");
  sample->add_option("--seed", so.seed, "Random seed")->capture_default_str();
  sample->add_option("--sigma", sigma, "posterior | forward")->capture_default_str();
  sample->add_option("--clip", so.clip, "Per-step bound on |coordinate|");
  sample->add_option("--out", so.output, "Output dataset file")->capture_default_str();

  EvalOptions eo;
  std::optional<std::string> csv, json;
  auto *eval = app.add_subcommand("eval", "COV/MAT metrics of generated against reference sets");
  eval->add_option("--generated", eo.generated, "Generated dataset file")->required();
  eval->add_option("--reference", eo.reference, "Reference dataset file")->required();
  eval->add_option("--split", eo.reference_split, "Only reference molecules of this split");
  eval->add_option("--delta", eo.delta, "Coverage threshold (angstrom)")->capture_default_str();
  eval->add_option("--ratio", eo.generation_ratio, "Expected |S_g| / |S_r|")->capture_default_str();
  eval->add_flag("--any-ratio", eo.allow_any_ratio, "Accept any number of generated conformers");
  eval->add_option("--csv", csv, "Write the delimited report here");
  eval->add_option("--json", json, "Write the structured report here");

  GenDataOptions go;
  auto *gen = app.add_subcommand("gen-data", "Write a synthetic two-mode toy dataset");
  gen->add_option("--out", go.output, "Dataset file")->capture_default_str();
  gen->add_option("--modes", go.modes, "Mode-label sidecar [<out>.modes.jsonl]");
  gen->add_option("--seed", go.seed, "Random seed")->capture_default_str();
  gen->add_option("--atoms", go.spec.chain_length, "Chain length")->capture_default_str();
  gen->add_option("--rotatable", go.spec.rotatable_bond, "Index k of the rotatable bond (k, k+1)")
      ->capture_default_str();
  gen->add_option("--modes-deg", go.spec.mode_torsions_deg, "Torsion modes in degrees [180 0]");
  gen->add_option("--jitter", go.spec.jitter, "Per-atom RMS jitter")->capture_default_str();
  gen->add_option("--conformers", go.spec.conformers_per_molecule, "References per molecule")
      ->capture_default_str();
  gen->add_option("--train", go.spec.train_molecules, "Training molecules")->capture_default_str();
  gen->add_option("--valid", go.spec.valid_molecules, "Validation molecules")->capture_default_str();
  gen->add_option("--test", go.spec.test_molecules, "Test molecules")->capture_default_str();
  gen->add_option("--elements", go.spec.element_types, "Distinct element codes")
      ->capture_default_str();

  verify::SuiteOptions vo;
  bool inject = false;
  auto *ver = app.add_subcommand("verify", "Run the invariant suite and print a pass/fail ledger");
  ver->add_option("--seed", vo.seed, "Random seed")->capture_default_str();
  ver->add_flag("--quick", vo.quick, "Fewer trials per check");
  ver->add_flag("--inject-fault", inject, "Flip the radial direction sign (must make checks fail)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const RunConfig config = tf.resolve();
      std::optional<std::filesystem::path> resume;
      if (tf.resume)
        resume = *tf.resume;
      cmd_train(config, std::cout, resume);
    } else if (*sample) {
      if (sigma == "posterior")
        so.sigma_mode = SigmaMode::kPosterior;
      else if (sigma == "forward")
        so.sigma_mode = SigmaMode::kForward;
      else
        throw InvalidInput("unknown --sigma '" + sigma + "'");
      cmd_sample(so, std::cout);
    } else if (*eval) {
      if (csv)
        eo.csv = *csv;
      if (json)
        eo.json = *json;
      cmd_eval(eo, std::cout);
    } else if (*gen) {
      cmd_gen_data(go, std::cout);
    } else if (*ver) {
      if (inject)
        vo.fault = FaultInjection::kRadialSign;
      return cmd_verify(vo, std::cout) ? 0 : 1;
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
