//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "confdiff/diffcore.hpp"
#include "confdiff/geom.hpp"
#include "confdiff/molgraph.hpp"
#include "confdiff/schedule.hpp"

namespace confdiff {

enum class TargetKind { kAligned, kChainRule };
enum class Weighting { kUnit, kElbo };

/// kPerExample: mean over the batch of w ||target - prediction||^2.
/// kPerAtom: the same, each example additionally divided by its atom count.
enum class LossReduction { kPerExample, kPerAtom };

TargetKind target_kind_from_name(std::string_view name);
std::string_view target_kind_name(TargetKind kind);
Weighting weighting_from_name(std::string_view name);
std::string_view weighting_name(Weighting w);

struct PlainTarget {
  Conformation noised;  // C^t
  Conformation eps;
};

PlainTarget make_plain_target(const VarianceSchedule &s, int t, const Conformation &c0,
                              const Conformation &noise);

/// Rotates the centered C^0 onto the centered C^t (Kabsch) and returns
/// (Q C^t - sqrt(abar) R Q C^0) / sqrt(1 - abar). Rotation-equivariant and
/// translation-invariant in C^t; zero center of mass.
Conformation make_aligned_target(const VarianceSchedule &s, int t, const Conformation &c0,
                                 const Conformation &ct);

/// sqrt(1 - abar) (d d^t / d C^t)^T s_d with the per-edge distance score
/// s_d = (d^t - sqrt(abar) d^0) / (1 - abar), both distances over `edges`.
Conformation make_chainrule_target(const VarianceSchedule &s, int t, const MolecularGraph &g,
                                   const Conformation &c0, const Conformation &ct,
                                   std::span<const Edge> edges);

struct TrainingExample {
  const MolecularGraph *graph = nullptr;
  Conformation c0;
  int t = 1;
  std::uint64_t noise_seed = 0;
  Conformation ct;
  Conformation target;
  double weight = 1.0;
};

/// Draws the forward noise from `noise_seed`, so C^t is reproducible from
/// (C^0, t, seed). Chain-rule edges come from the neighbor list of C^0.
TrainingExample make_training_example(const VarianceSchedule &s, TargetKind kind,
                                      Weighting weighting, const MolecularGraph &g,
                                      const Conformation &c0, int t, std::uint64_t noise_seed,
                                      double radius);

/// Differentiable loss over a batch whose predictions are stacked in example order.
diff::Var loss(diff::Tape &tape, std::span<const TrainingExample> batch, diff::Var predictions,
               LossReduction reduction = LossReduction::kPerExample);

/// Plain-value version of the same loss.
double loss(std::span<const TrainingExample> batch, std::span<const Conformation> predictions,
            LossReduction reduction = LossReduction::kPerExample);

}  // namespace confdiff
