//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/gradcheck.hpp"

#include <algorithm>

namespace confdiff::diff {

namespace {

GradientCheckEntry compare(std::string name, const Tensor &analytic, const Tensor &numeric) {
  const double denom = std::max({analytic.norm(), numeric.norm(), 1e-8});
  return {std::move(name), (analytic - numeric).norm() / denom, analytic.norm()};
}

}  // namespace

double GradientCheckReport::worst() const {
  double w = 0.0;
  for (const auto &e : entries)
    w = std::max(w, e.relative_error);
  return w;
}

GradientCheckReport check_parameter_gradients(const ParameterLoss &loss,
                                              ParameterStore &params, double step) {
  Tape tape;
  Var root = loss(tape, params);
  tape.backward(root);
  const Gradients analytic = tape.parameter_gradients();

  auto evaluate = [&]() {
    Tape t;
    return loss(t, params).value()(0, 0);
  };

  GradientCheckReport report;
  for (const auto &[name, entry] : params.entries()) {
    Tensor &value = params.value(name);
    Tensor numeric(value.rows(), value.cols());
    for (Eigen::Index k = 0; k < value.size(); ++k) {
      const double saved = value.data()[k];
      value.data()[k] = saved + step;
      const double up = evaluate();
      value.data()[k] = saved - step;
      const double down = evaluate();
      value.data()[k] = saved;
      numeric.data()[k] = (up - down) / (2.0 * step);
    }
    auto it = analytic.find(name);
    const Tensor a = it == analytic.end() ? Tensor::Zero(value.rows(), value.cols()) : it->second;
    report.entries.push_back(compare(name, a, numeric));
  }
  return report;
}

GradientCheckReport check_input_gradients(const InputLoss &loss, std::vector<Tensor> inputs,
                                          double step) {
  auto run = [&](bool with_backward, std::vector<Tensor> *grads) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor &x : inputs)
      vars.push_back(tape.variable(x));
    Var root = loss(tape, vars);
    if (with_backward) {
      tape.backward(root);
      for (const Var &v : vars)
        grads->push_back(tape.grad(v));
    }
    return root.value()(0, 0);
  };

  std::vector<Tensor> analytic;
  run(true, &analytic);

  GradientCheckReport report;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor numeric(inputs[i].rows(), inputs[i].cols());
    for (Eigen::Index k = 0; k < inputs[i].size(); ++k) {
      const double saved = inputs[i].data()[k];
      inputs[i].data()[k] = saved + step;
      const double up = run(false, nullptr);
      inputs[i].data()[k] = saved - step;
      const double down = run(false, nullptr);
      inputs[i].data()[k] = saved;
      numeric.data()[k] = (up - down) / (2.0 * step);
    }
    report.entries.push_back(compare("input" + std::to_string(i), analytic[i], numeric));
  }
  return report;
}

}  // namespace confdiff::diff
