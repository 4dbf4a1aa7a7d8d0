//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/commands.hpp"

#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "confdiff/errors.hpp"

namespace confdiff {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kEvaluationBatch = 64;
constexpr std::uint64_t kEvaluationSeed = 0x5eed;

void write_checkpoint_atomic(const fs::path &path, const Checkpoint &ckpt) {
  const fs::path tmp = path.string() + ".tmp";
  write_checkpoint_file(tmp, ckpt);
  fs::rename(tmp, path);
}

}  // namespace

TrainOutcome cmd_train(const RunConfig &config, std::ostream &log,
                       const std::optional<fs::path> &resume_from) {
  config.validate();
  if (config.paper_scale())
    log << "warning: not desk-scale; this configuration was sized for ~48 h on an "
           "accelerator-class device\n";
  if (config.dataset.empty())
    throw InvalidInput("train: no dataset given (set --data or paths.dataset in the config)");
  std::vector<DatasetRecord> records = read_dataset_file(config.dataset);

  std::optional<Trainer> trainer;
  if (resume_from) {
    Checkpoint ckpt = read_checkpoint_file(*resume_from);
    RunConfig stored = run_config_from_json(ckpt.config_json);
    if (config_fingerprint(stored) != config_fingerprint(config)) {
      // Only the budget may change on resume.
      stored.iterations = config.iterations;
      stored.checkpoint_every = config.checkpoint_every;
      stored.output_dir = config.output_dir;
      stored.dataset = config.dataset;
      if (config_fingerprint(stored) != config_fingerprint(config))
        throw InvalidInput("train: checkpoint " + resume_from->string() +
                           " was written with a different configuration");
      ckpt.config_json = run_config_to_json(config);
    }
    trainer.emplace(Trainer::resume(ckpt, std::move(records)));
    log << "resumed at step " << trainer->steps_done() << "\n";
  } else {
    trainer.emplace(config, std::move(records));
  }

  const fs::path out = config.output_dir;
  fs::create_directories(out);
  write_text_file(out / "config.json", run_config_to_json(config));

  const std::vector<TrainingExample> held_out =
      trainer->evaluation_batch(kEvaluationBatch, kEvaluationSeed);
  TrainOutcome result;
  result.baseline_loss = trainer->evaluate(held_out);
  log << "step " << trainer->steps_done() << " held-out loss " << result.baseline_loss << "\n";

  result.loss_log = out / "loss.csv";
  const bool append = resume_from.has_value() && fs::exists(result.loss_log);
  std::ofstream csv(result.loss_log, append ? std::ios::app : std::ios::trunc);
  if (!csv)
    throw InvalidInput("train: cannot write " + result.loss_log.string());
  csv.precision(17);
  if (!append)
    csv << "step,loss,wall_time_s\n";

  const std::int64_t report_every = std::max<std::int64_t>(1, config.iterations / 20);
  while (trainer->steps_done() < config.iterations) {
    const LossRecord r = trainer->step();
    csv << r.step << ',' << r.loss << ',' << r.wall_seconds << '\n';
    if (r.step % report_every == 0)
      log << "step " << r.step << " loss " << r.loss << " (" << r.wall_seconds << " s)\n";
    if (config.checkpoint_every > 0 && r.step % config.checkpoint_every == 0 &&
        r.step < config.iterations)
      write_checkpoint_atomic(out / ("ckpt-" + std::to_string(r.step) + ".bin"),
                              trainer->checkpoint());
  }
  csv.flush();

  result.checkpoint = out / "checkpoint.bin";
  write_checkpoint_atomic(result.checkpoint, trainer->checkpoint());
  result.steps = trainer->steps_done();
  result.final_loss = trainer->evaluate(held_out);
  log << "step " << result.steps << " held-out loss " << result.final_loss << "\n"
      << "wrote " << result.checkpoint.string() << "\n";
  return result;
}

std::int64_t cmd_sample(const SampleOptions &options, std::ostream &log) {
  if (options.count && *options.count < 1)
    throw InvalidInput("sample: count must be positive");
  const Checkpoint ckpt = read_checkpoint_file(options.checkpoint);
  const RunConfig config = run_config_from_json(ckpt.config_json);
  const DenoiserModel model = model_from_checkpoint(ckpt);
  const VarianceSchedule schedule = config.schedule();
  const EpsModel eps = as_eps_model(model);

  std::vector<DatasetRecord> generated;
  std::int64_t total = 0;
  for (const DatasetRecord &rec : read_dataset_file(options.graphs)) {
    if (options.split && split_name(rec.split) != *options.split)
      continue;
    SamplerConfig sc;
    sc.sigma_mode = options.sigma_mode;
    sc.clip = options.clip;
    sc.num_samples = options.count.value_or(2 * static_cast<int>(rec.conformers.size()));
    if (sc.num_samples < 1)
      throw InvalidInput("sample: molecule '" + rec.id + "' has no references; pass --count");
    // Each molecule gets its own stream so subsets of a graph file reproduce.
    sc.seed = options.seed ^ std::stoull(fnv1a_hex(rec.id), nullptr, 16);
    DatasetRecord out{rec.id, rec.graph, sample(eps, schedule, rec.graph, sc), Split::kGenerated};
    total += static_cast<std::int64_t>(out.conformers.size());
    generated.push_back(std::move(out));
  }
  if (generated.empty())
    throw InvalidInput("sample: no molecules selected from " + options.graphs.string());
  write_dataset_file(options.output, generated);

  json manifest = {
      {"format", "confdiff-sample-manifest"},
      {"version", "1.0"},
      {"seed", options.seed},
      {"count", options.count ? json(*options.count) : json("2x references")},
      {"molecules", generated.size()},
      {"conformers", total},
      {"sigma_mode", options.sigma_mode == SigmaMode::kPosterior ? "posterior" : "forward"},
      {"config_fingerprint", config_fingerprint(config)},
      {"checkpoint", options.checkpoint.string()},
      {"checkpoint_hash", file_hash(options.checkpoint)},
      {"graphs", options.graphs.string()},
      {"graphs_hash", file_hash(options.graphs)},
      {"output_hash", file_hash(options.output)},
  };
  if (options.split)
    manifest["split"] = *options.split;
  if (options.clip)
    manifest["clip"] = *options.clip;
  write_text_file(options.output.string() + ".manifest.json", manifest.dump(2) + "\n");
  log << "wrote " << total << " conformers for " << generated.size() << " molecules to "
      << options.output.string() << "\n";
  return total;
}

MetricsReport cmd_eval(const EvalOptions &options, std::ostream &log) {
  MetricsConfig mc;
  mc.delta = options.delta;
  mc.generation_ratio = options.generation_ratio;
  mc.validate();

  std::map<std::string, DatasetRecord> generated;
  for (DatasetRecord &rec : read_dataset_file(options.generated)) {
    const std::string id = rec.id;
    generated.emplace(id, std::move(rec));
  }
  std::vector<MoleculeMetrics> rows;
  for (const DatasetRecord &ref : read_dataset_file(options.reference)) {
    if (options.reference_split && split_name(ref.split) != *options.reference_split)
      continue;
    const auto it = generated.find(ref.id);
    if (it == generated.end())
      throw InvalidInput("eval: molecule '" + ref.id + "' has no generated conformers in " +
                         options.generated.string());
    if (it->second.graph != ref.graph)
      throw InvalidInput("eval: molecule '" + ref.id + "' has a different graph in the generated set");
    const double want = options.generation_ratio * static_cast<double>(ref.conformers.size());
    if (!options.allow_any_ratio &&
        static_cast<double>(it->second.conformers.size()) != want)
      throw InvalidInput("eval: molecule '" + ref.id + "' has " +
                         std::to_string(it->second.conformers.size()) + " generated conformers, expected " +
                         std::to_string(static_cast<long>(want)) + " (pass --any-ratio to override)");
    rows.push_back(evaluate_molecule(ref.id, it->second.conformers, ref.conformers, options.delta));
  }
  if (rows.empty())
    throw InvalidInput("eval: no reference molecules selected from " + options.reference.string());

  const MetricsReport report = evaluate_suite(std::move(rows), options.delta);
  if (options.csv)
    write_text_file(*options.csv, report_to_csv(report));
  if (options.json)
    write_text_file(*options.json, report_to_json(report));
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%zu molecules, delta %.3f\nCOV-R mean %.2f median %.2f | MAT-R mean %.4f median %.4f\n"
                "COV-P mean %.2f median %.2f | MAT-P mean %.4f median %.4f\n",
                report.molecules.size(), report.delta, report.cov_r.mean, report.cov_r.median,
                report.mat_r.mean, report.mat_r.median, report.cov_p.mean, report.cov_p.median,
                report.mat_p.mean, report.mat_p.median);
  log << buf;
  return report;
}

void cmd_gen_data(const GenDataOptions &options, std::ostream &log) {
  const ToyDataset data = generate_toy_dataset(options.spec, options.seed);
  write_dataset_file(options.output, data.records);
  const fs::path modes = options.modes.value_or(fs::path(options.output.string() + ".modes.jsonl"));
  write_mode_labels_file(modes, data.labels);
  log << "wrote " << data.records.size() << " molecules to " << options.output.string()
      << " and mode labels to " << modes.string() << "\n";
}

bool cmd_verify(const verify::SuiteOptions &options, std::ostream &log) {
  const std::vector<verify::CheckResult> results = verify::run_suite(options);
  log << verify::format_ledger(results);
  const bool ok = verify::all_passed(results);
  log << (ok ? "all checks passed\n" : "one or more checks FAILED\n");
  return ok;
}

}  // namespace confdiff
