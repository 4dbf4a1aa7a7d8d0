//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "confdiff/diffcore.hpp"

namespace confdiff::diff {

struct GradientCheckEntry {
  std::string name;
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8)
  double analytic_norm = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;

  double worst() const;
  bool passed(double tolerance) const { return worst() < tolerance; }
};

using ParameterLoss = std::function<Var(Tape &, const ParameterStore &)>;

/// Compares back-propagated parameter gradients with central differences of
/// the same loss. Perturbs `params` in place and restores every value.
GradientCheckReport check_parameter_gradients(const ParameterLoss &loss,
                                              ParameterStore &params, double step = 1e-5);

using InputLoss = std::function<Var(Tape &, std::span<const Var>)>;

/// Same check for gradients with respect to the given input tensors.
GradientCheckReport check_input_gradients(const InputLoss &loss, std::vector<Tensor> inputs,
                                          double step = 1e-5);

}  // namespace confdiff::diff
