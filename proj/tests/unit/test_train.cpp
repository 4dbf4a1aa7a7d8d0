//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "confdiff/errors.hpp"
#include "confdiff/train.hpp"
#include "confdiff/verify.hpp"

namespace confdiff {
namespace {

std::vector<DatasetRecord> toy_records(int train = 40) {
  ToySpec spec;
  spec.train_molecules = train;
  spec.test_molecules = 4;
  return generate_toy_dataset(spec, 21).records;
}

RunConfig small_config() {
  RunConfig c;
  c.model = verify::compact_config();
  c.model.hidden_dim = 24;
  c.model.radius = 6.0;
  c.batch_size = 8;
  c.seed = 5;
  return c;
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c = small_config();
  c.steps = 50;
  c.beta_T = 0.03;
  c.objective = TargetKind::kChainRule;
  c.weighting = Weighting::kElbo;
  c.model.output_mode = OutputMode::kAbsolute;
  c.optimizer.lr = 3e-4;
  c.lr_final = 2e-5;
  c.dataset = "data/toy.jsonl";
  const std::string text = run_config_to_json(c);
  const RunConfig back = run_config_from_json(text);
  EXPECT_EQ(run_config_to_json(back), text);
  EXPECT_EQ(config_fingerprint(back), config_fingerprint(c));
  EXPECT_EQ(back.schedule().steps(), 50);
  EXPECT_EQ(back.schedule().beta(50), 0.03);
}

TEST(RunConfig, CosineDecayHitsBothEndpoints) {
  RunConfig c = small_config();
  c.optimizer.lr = 1e-3;
  c.iterations = 100;
  EXPECT_EQ(c.learning_rate(0), 1e-3);
  EXPECT_EQ(c.learning_rate(100), 1e-3);
  c.lr_final = 1e-4;
  EXPECT_DOUBLE_EQ(c.learning_rate(0), 1e-3);
  EXPECT_NEAR(c.learning_rate(50), 5.5e-4, 1e-15);
  EXPECT_NEAR(c.learning_rate(25), 1e-4 + 0.45e-3 * (1.0 + std::sqrt(0.5)), 1e-15);
  EXPECT_DOUBLE_EQ(c.learning_rate(100), 1e-4);
  EXPECT_DOUBLE_EQ(c.learning_rate(250), 1e-4);
  c.lr_final = 2e-3;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(RunConfig, PartialDocumentOverridesBase) {
  RunConfig base = small_config();
  const RunConfig c = run_config_from_json(R"({"batch_size": 3, "optimizer": {"lr": 0.01}})", base);
  EXPECT_EQ(c.batch_size, 3);
  EXPECT_EQ(c.optimizer.lr, 0.01);
  EXPECT_EQ(c.model.hidden_dim, base.model.hidden_dim);
  EXPECT_EQ(c.seed, base.seed);
}

TEST(RunConfig, RejectsUnknownKeysAndFutureVersions) {
  EXPECT_THROW(run_config_from_json(R"({"batchsize": 3})"), ParseError);
  EXPECT_THROW(run_config_from_json(R"({"model": {"width": 3}})"), ParseError);
  EXPECT_THROW(run_config_from_json(R"({"version": "2.0"})"), ParseError);
  EXPECT_THROW(run_config_from_json("not json"), ParseError);
}

TEST(RunConfig, PaperPresetsCarryPublishedHyperparameters) {
  const RunConfig qm9 = RunConfig::preset("paper-qm9");
  EXPECT_EQ(qm9.batch_size, 64);
  EXPECT_EQ(qm9.optimizer.lr, 1e-3);
  EXPECT_EQ(qm9.iterations, 1000000);
  EXPECT_EQ(qm9.schedule().steps(), 5000);
  EXPECT_TRUE(qm9.paper_scale());
  EXPECT_EQ(RunConfig::preset("paper-drugs").batch_size, 32);
  EXPECT_FALSE(RunConfig::preset("desk").paper_scale());
  EXPECT_EQ(RunConfig::preset("desk").schedule().steps(), 100);
  EXPECT_THROW(RunConfig::preset("cluster"), InvalidInput);
}

TEST(Trainer, IdenticalConfigsReproduceLossesBitForBit) {
  Trainer a(small_config(), toy_records());
  Trainer b(small_config(), toy_records());
  for (int k = 0; k < 5; ++k)
    EXPECT_EQ(a.step().loss, b.step().loss);
}

TEST(Trainer, ResumeContinuesTrajectory) {
  Trainer straight(small_config(), toy_records());
  std::vector<double> want;
  for (int k = 0; k < 6; ++k)
    want.push_back(straight.step().loss);

  Trainer first(small_config(), toy_records());
  for (int k = 0; k < 3; ++k)
    EXPECT_EQ(first.step().loss, want[k]);
  std::stringstream buffer;
  write_checkpoint(buffer, first.checkpoint());
  Trainer second = Trainer::resume(read_checkpoint(buffer), toy_records());
  EXPECT_EQ(second.steps_done(), 3);
  for (int k = 3; k < 6; ++k) {
    const LossRecord r = second.step();
    EXPECT_EQ(r.step, k + 1);
    EXPECT_EQ(r.loss, want[k]);
  }
}

TEST(Trainer, TwoHundredStepsBeatUntrainedBaseline) {
  RunConfig c = small_config();
  c.optimizer.lr = 3e-3;
  Trainer t(c, toy_records());
  const auto held_out = t.evaluation_batch(64, 99);
  const double before = t.evaluate(held_out);
  for (int k = 0; k < 200; ++k)
    t.step();
  const double after = t.evaluate(held_out);
  EXPECT_LT(after, before);
}

TEST(Trainer, BothObjectivesRun) {
  for (TargetKind kind : {TargetKind::kAligned, TargetKind::kChainRule}) {
    RunConfig c = small_config();
    c.objective = kind;
    Trainer t(c, toy_records(10));
    for (int k = 0; k < 3; ++k)
      EXPECT_TRUE(std::isfinite(t.step().loss));
  }
}

TEST(Trainer, NeedsTrainingMolecules) {
  std::vector<DatasetRecord> records = toy_records(0);
  EXPECT_THROW(Trainer(small_config(), records), InvalidInput);
}

TEST(Trainer, CheckpointRebuildsTheSameModel) {
  Trainer t(small_config(), toy_records(10));
  t.step();
  const DenoiserModel m = model_from_checkpoint(t.checkpoint());
  const DatasetRecord r = toy_records(10).front();
  EXPECT_EQ(m.predict(r.graph, r.conformers[0], 7), t.model().predict(r.graph, r.conformers[0], 7));
}

}  // namespace
}  // namespace confdiff
