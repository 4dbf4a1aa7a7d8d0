//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "confdiff/errors.hpp"

namespace confdiff {

using nlohmann::json;

RunConfig RunConfig::preset(std::string_view name) {
  RunConfig c;
  if (name == "desk")
    return c;
  if (name == "paper-qm9" || name == "paper-drugs") {
    c.schedule_preset = "paper-default";
    c.model.radius = 10.0;
    c.optimizer.lr = 1e-3;
    c.batch_size = name == "paper-qm9" ? 64 : 32;
    c.iterations = 1000000;
    c.checkpoint_every = 10000;
    c.objective = TargetKind::kChainRule;
    return c;
  }
  throw InvalidInput("unknown run preset '" + std::string(name) + "'");
}

VarianceSchedule RunConfig::schedule() const {
  const PresetParameters p = confdiff::schedule_preset(schedule_preset);
  return VarianceSchedule::sigmoid(steps.value_or(p.steps), beta_1.value_or(p.beta_1),
                                   beta_T.value_or(p.beta_T), sigmoid_shape);
}

double RunConfig::learning_rate(std::int64_t completed) const {
  if (!lr_final || iterations <= 0)
    return optimizer.lr;
  const double progress =
      std::min(1.0, static_cast<double>(completed) / static_cast<double>(iterations));
  return *lr_final + 0.5 * (optimizer.lr - *lr_final) * (1.0 + std::cos(std::numbers::pi * progress));
}

bool RunConfig::paper_scale() const {
  return schedule().steps() >= 1000 || iterations >= 100000;
}

void RunConfig::validate() const {
  model.validate();
  schedule();
  if (batch_size < 1)
    throw InvalidInput("batch_size must be positive");
  if (iterations < 0)
    throw InvalidInput("iterations must be non-negative");
  if (checkpoint_every < 0)
    throw InvalidInput("checkpoint_every must be non-negative");
  if (!(optimizer.lr > 0.0))
    throw InvalidInput("learning rate must be positive");
  if (lr_final && !(*lr_final > 0.0 && *lr_final <= optimizer.lr))
    throw InvalidInput("final learning rate must lie in (0, lr]");
}

namespace {

std::string output_mode_name(OutputMode m) {
  return m == OutputMode::kResidual ? "residual" : "absolute";
}

OutputMode output_mode_from_name(const std::string &s) {
  if (s == "residual")
    return OutputMode::kResidual;
  if (s == "absolute")
    return OutputMode::kAbsolute;
  throw InvalidInput("unknown output_mode '" + s + "'");
}

json to_json(const RunConfig &c) {
  json schedule = {{"preset", c.schedule_preset}, {"sigmoid_shape", c.sigmoid_shape}};
  if (c.steps)
    schedule["steps"] = *c.steps;
  if (c.beta_1)
    schedule["beta_1"] = *c.beta_1;
  if (c.beta_T)
    schedule["beta_T"] = *c.beta_T;
  json optimizer = {{"lr", c.optimizer.lr},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps}};
  if (c.lr_final)
    optimizer["lr_final"] = *c.lr_final;
  return {{"format", "confdiff-config"},
          {"version", "1.0"},
          {"schedule", schedule},
          {"model",
           {{"num_elements", c.model.num_elements},
            {"hidden_dim", c.model.hidden_dim},
            {"encoder_layers", c.model.encoder_layers},
            {"gfn_layers", c.model.gfn_layers},
            {"time_dim", c.model.time_dim},
            {"rbf_bins", c.model.rbf_bins},
            {"radius", c.model.radius},
            {"output_mode", output_mode_name(c.model.output_mode)}}},
          {"objective", target_kind_name(c.objective)},
          {"weighting", weighting_name(c.weighting)},
          {"optimizer", optimizer},
          {"batch_size", c.batch_size},
          {"iterations", c.iterations},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"paths", {{"dataset", c.dataset}, {"output_dir", c.output_dir}}}};
}

void reject_unknown(const json &j, std::initializer_list<const char *> known,
                    const std::string &where) {
  for (const auto &[key, value] : j.items()) {
    bool ok = false;
    for (const char *k : known)
      ok = ok || key == k;
    if (!ok)
      throw ParseError("config: unknown key '" + where + key + "'");
  }
}

template <class T>
void take(const json &j, const char *key, T &dst) {
  if (j.contains(key))
    dst = j[key].get<T>();
}

}  // namespace

std::string run_config_to_json(const RunConfig &config) { return to_json(config).dump(2) + "\n"; }

RunConfig run_config_from_json(std::string_view text, const RunConfig &base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object())
    throw ParseError("config: top level must be an object");
  RunConfig c = base;
  try {
    reject_unknown(j,
                   {"format", "version", "schedule", "model", "objective", "weighting",
                    "optimizer", "batch_size", "iterations", "seed", "checkpoint_every", "paths"},
                   "");
    if (j.contains("format") && j["format"] != "confdiff-config")
      throw ParseError("config: field 'format' must be confdiff-config");
    if (j.contains("version")) {
      const std::string v = j["version"].get<std::string>();
      if (v.substr(0, v.find('.')) != "1")
        throw ParseError("config: unsupported major version in '" + v + "'");
    }
    if (j.contains("schedule")) {
      const json &s = j["schedule"];
      reject_unknown(s, {"preset", "steps", "beta_1", "beta_T", "sigmoid_shape"}, "schedule.");
      take(s, "preset", c.schedule_preset);
      if (s.contains("steps"))
        c.steps = s["steps"].get<int>();
      if (s.contains("beta_1"))
        c.beta_1 = s["beta_1"].get<double>();
      if (s.contains("beta_T"))
        c.beta_T = s["beta_T"].get<double>();
      take(s, "sigmoid_shape", c.sigmoid_shape);
    }
    if (j.contains("model")) {
      const json &m = j["model"];
      reject_unknown(m,
                     {"num_elements", "hidden_dim", "encoder_layers", "gfn_layers", "time_dim",
                      "rbf_bins", "radius", "output_mode"},
                     "model.");
      take(m, "num_elements", c.model.num_elements);
      take(m, "hidden_dim", c.model.hidden_dim);
      take(m, "encoder_layers", c.model.encoder_layers);
      take(m, "gfn_layers", c.model.gfn_layers);
      take(m, "time_dim", c.model.time_dim);
      take(m, "rbf_bins", c.model.rbf_bins);
      take(m, "radius", c.model.radius);
      if (m.contains("output_mode"))
        c.model.output_mode = output_mode_from_name(m["output_mode"].get<std::string>());
    }
    if (j.contains("objective"))
      c.objective = target_kind_from_name(j["objective"].get<std::string>());
    if (j.contains("weighting"))
      c.weighting = weighting_from_name(j["weighting"].get<std::string>());
    if (j.contains("optimizer")) {
      const json &o = j["optimizer"];
      reject_unknown(o, {"lr", "lr_final", "beta1", "beta2", "eps"}, "optimizer.");
      take(o, "lr", c.optimizer.lr);
      take(o, "beta1", c.optimizer.beta1);
      take(o, "beta2", c.optimizer.beta2);
      take(o, "eps", c.optimizer.eps);
      if (o.contains("lr_final"))
        c.lr_final = o["lr_final"].get<double>();
    }
    take(j, "batch_size", c.batch_size);
    take(j, "iterations", c.iterations);
    take(j, "seed", c.seed);
    take(j, "checkpoint_every", c.checkpoint_every);
    if (j.contains("paths")) {
      const json &p = j["paths"];
      reject_unknown(p, {"dataset", "output_dir"}, "paths.");
      take(p, "dataset", c.dataset);
      take(p, "output_dir", c.output_dir);
    }
  } catch (const json::exception &e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

std::string config_fingerprint(const RunConfig &config) {
  return fnv1a_hex(to_json(config).dump());
}

// ---------------------------------------------------------------------------

namespace {

std::vector<DatasetRecord> training_records(std::vector<DatasetRecord> records) {
  std::vector<DatasetRecord> out;
  for (DatasetRecord &r : records)
    if (r.split == Split::kTrain && !r.conformers.empty())
      out.push_back(std::move(r));
  if (out.empty())
    throw InvalidInput("dataset has no training molecules with conformers");
  return out;
}

}  // namespace

Trainer::Trainer(RunConfig config, std::vector<DatasetRecord> records)
    : config_(std::move(config)),
      schedule_(config_.schedule()),
      records_(training_records(std::move(records))),
      model_(DenoiserModel::initialized(config_.model, config_.seed)),
      rng_(config_.seed ^ 0x9e3779b97f4a7c15ULL) {
  config_.validate();
}

Trainer Trainer::resume(const Checkpoint &ckpt, std::vector<DatasetRecord> records) {
  Trainer t(run_config_from_json(ckpt.config_json), std::move(records));
  for (const auto &[name, p] : t.model_.params.entries())
    if (!ckpt.params.contains(name))
      throw ParseError("checkpoint lacks parameter '" + name + "'");
  t.model_.params = ckpt.params;
  std::istringstream state(ckpt.rng_state);
  state >> t.rng_;
  if (!state)
    throw ParseError("checkpoint rng state is malformed");
  return t;
}

TrainingExample Trainer::draw_example(Rng &rng) const {
  std::uniform_int_distribution<std::size_t> pick_mol(0, records_.size() - 1);
  const DatasetRecord &rec = records_[pick_mol(rng)];
  std::uniform_int_distribution<std::size_t> pick_conf(0, rec.conformers.size() - 1);
  const Conformation &c0 = rec.conformers[pick_conf(rng)];
  std::uniform_int_distribution<int> pick_t(1, schedule_.steps());
  const int t = pick_t(rng);
  const std::uint64_t noise_seed = rng();
  return make_training_example(schedule_, config_.objective, config_.weighting, rec.graph, c0, t,
                               noise_seed, config_.model.radius);
}

namespace {

diff::Var batch_loss(diff::Tape &tape, const DenoiserModel &model,
                     std::span<const TrainingExample> batch) {
  std::vector<DenoiserInput> inputs;
  inputs.reserve(batch.size());
  for (const TrainingExample &ex : batch)
    inputs.push_back({ex.graph, ex.ct, ex.t});
  const BatchGraph graph = make_batch_graph(inputs, model.config);
  diff::Var eps = eps_theta(tape, model.params, model.config, graph);
  return loss(tape, batch, eps, LossReduction::kPerAtom);
}

}  // namespace

LossRecord Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<TrainingExample> batch;
  batch.reserve(static_cast<std::size_t>(config_.batch_size));
  for (int b = 0; b < config_.batch_size; ++b)
    batch.push_back(draw_example(rng_));

  diff::Tape tape;
  diff::Var l = batch_loss(tape, model_, batch);
  tape.backward(l);
  diff::AdamOptions options = config_.optimizer;
  options.lr = config_.learning_rate(model_.params.step());
  diff::adam_step(model_.params, tape.parameter_gradients(), options);

  elapsed_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {model_.params.step(), l.value()(0, 0), elapsed_};
}

std::vector<TrainingExample> Trainer::evaluation_batch(int size, std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<TrainingExample> out;
  for (int k = 0; k < size; ++k)
    out.push_back(draw_example(rng));
  return out;
}

double Trainer::evaluate(std::span<const TrainingExample> batch) const {
  diff::Tape tape(false);
  return batch_loss(tape, model_, batch).value()(0, 0);
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt;
  ckpt.config_json = to_json(config_).dump();
  std::ostringstream state;
  state << rng_;
  ckpt.rng_state = state.str();
  ckpt.params = model_.params;
  return ckpt;
}

DenoiserModel model_from_checkpoint(const Checkpoint &ckpt) {
  const RunConfig config = run_config_from_json(ckpt.config_json);
  DenoiserModel model = DenoiserModel::initialized(config.model, config.seed);
  for (const auto &[name, p] : model.params.entries())
    if (!ckpt.params.contains(name))
      throw ParseError("checkpoint lacks parameter '" + name + "'");
  model.params = ckpt.params;
  return model;
}

}  // namespace confdiff
