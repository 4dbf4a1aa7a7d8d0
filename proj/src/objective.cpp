//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/objective.hpp"

#include <cmath>
#include <string>

#include "confdiff/errors.hpp"

namespace confdiff {

TargetKind target_kind_from_name(std::string_view name) {
  if (name == "aligned")
    return TargetKind::kAligned;
  if (name == "chainrule")
    return TargetKind::kChainRule;
  throw InvalidInput("unknown objective '" + std::string(name) +
                     "' (expected aligned or chainrule)");
}

std::string_view target_kind_name(TargetKind kind) {
  return kind == TargetKind::kAligned ? "aligned" : "chainrule";
}

Weighting weighting_from_name(std::string_view name) {
  if (name == "unit")
    return Weighting::kUnit;
  if (name == "elbo")
    return Weighting::kElbo;
  throw InvalidInput("unknown weighting '" + std::string(name) + "' (expected unit or elbo)");
}

std::string_view weighting_name(Weighting w) { return w == Weighting::kUnit ? "unit" : "elbo"; }

PlainTarget make_plain_target(const VarianceSchedule &s, int t, const Conformation &c0,
                              const Conformation &noise) {
  return {sample_forward(s, t, c0, noise), noise};
}

Conformation make_aligned_target(const VarianceSchedule &s, int t, const Conformation &c0,
                                 const Conformation &ct) {
  if (c0.rows() != ct.rows())
    throw InvalidInput("make_aligned_target: atom counts differ");
  const MarginalCoefficients m = marginal(s, t);
  const Conformation ct_centered = project_com_free(ct);
  const Conformation c0_aligned = kabsch_align(project_com_free(c0), ct_centered).aligned;
  return (ct_centered - m.mean_coef * c0_aligned) / std::sqrt(m.variance);
}

Conformation make_chainrule_target(const VarianceSchedule &s, int t, const MolecularGraph &g,
                                   const Conformation &c0, const Conformation &ct,
                                   std::span<const Edge> edges) {
  if (c0.rows() != g.atom_count() || ct.rows() != g.atom_count())
    throw InvalidInput("make_chainrule_target: conformation does not match graph");
  const MarginalCoefficients m = marginal(s, t);
  const Eigen::VectorXd d0 = distances(edges, c0).d;
  const Eigen::VectorXd dt = distances(edges, ct).d;
  const Eigen::VectorXd score = (dt - m.mean_coef * d0) / m.variance;
  return std::sqrt(m.variance) * distance_jacobian_apply(edges, ct, score).field;
}

TrainingExample make_training_example(const VarianceSchedule &s, TargetKind kind,
                                      Weighting weighting, const MolecularGraph &g,
                                      const Conformation &c0, int t, std::uint64_t noise_seed,
                                      double radius) {
  TrainingExample ex;
  ex.graph = &g;
  ex.c0 = c0;
  ex.t = t;
  ex.noise_seed = noise_seed;
  Rng rng(noise_seed);
  const PlainTarget plain = make_plain_target(s, t, c0, standard_normal(g.atom_count(), rng));
  ex.ct = plain.noised;
  if (kind == TargetKind::kAligned) {
    ex.target = make_aligned_target(s, t, c0, ex.ct);
  } else {
    const NeighborList nl = build_neighbor_list(g, c0, radius);
    ex.target = make_chainrule_target(s, t, g, c0, ex.ct, nl.edges);
  }
  ex.weight = weighting == Weighting::kUnit ? 1.0 : s.gamma(t);
  return ex;
}

namespace {

double example_scale(const TrainingExample &ex, LossReduction reduction, std::size_t batch) {
  double w = ex.weight / static_cast<double>(batch);
  if (reduction == LossReduction::kPerAtom)
    w /= static_cast<double>(ex.target.rows());
  return w;
}

}  // namespace

diff::Var loss(diff::Tape &tape, std::span<const TrainingExample> batch, diff::Var predictions,
               LossReduction reduction) {
  Eigen::Index rows = 0;
  for (const TrainingExample &ex : batch)
    rows += ex.target.rows();
  if (predictions.rows() != rows || predictions.cols() != 3)
    throw ShapeError("loss: predictions (" + std::to_string(predictions.rows()) + "x" +
                     std::to_string(predictions.cols()) + ") do not match " +
                     std::to_string(rows) + " target rows");
  diff::Tensor targets(rows, 3);
  diff::Tensor weights(rows, 1);
  Eigen::Index at = 0;
  for (const TrainingExample &ex : batch) {
    const Eigen::Index n = ex.target.rows();
    targets.middleRows(at, n) = ex.target;
    weights.middleRows(at, n).setConstant(example_scale(ex, reduction, batch.size()));
    at += n;
  }
  diff::Var residual = diff::sub(tape.constant(std::move(targets)), predictions);
  diff::Var out =
      diff::sum(diff::mul(diff::row_sqnorm(residual), tape.constant(std::move(weights))));
  if (!std::isfinite(out.value()(0, 0)))
    throw TrainingError("loss is not finite");
  return out;
}

double loss(std::span<const TrainingExample> batch, std::span<const Conformation> predictions,
            LossReduction reduction) {
  if (batch.size() != predictions.size())
    throw InvalidInput("loss: batch and prediction counts differ");
  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (predictions[k].rows() != batch[k].target.rows())
      throw InvalidInput("loss: prediction shape mismatch at example " + std::to_string(k));
    total += example_scale(batch[k], reduction, batch.size()) *
             (batch[k].target - predictions[k]).squaredNorm();
  }
  if (!std::isfinite(total))
    throw TrainingError("loss is not finite");
  return total;
}

}  // namespace confdiff
