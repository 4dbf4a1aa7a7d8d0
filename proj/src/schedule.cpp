//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/schedule.hpp"

#include <cmath>
#include <string>

#include "confdiff/errors.hpp"

namespace confdiff {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_same_shape(const Conformation &a, const Conformation &b, const char *what) {
  if (a.rows() != b.rows())
    throw InvalidInput(std::string(what) + ": atom counts differ (" +
                       std::to_string(a.rows()) + " vs " + std::to_string(b.rows()) + ")");
}

}  // namespace

VarianceSchedule VarianceSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty())
    throw InvalidInput("variance schedule needs at least one step");
  VarianceSchedule s;
  s.betas_.reserve(betas.size() + 1);
  s.betas_.push_back(0.0);
  s.alpha_bars_.reserve(betas.size() + 1);
  s.alpha_bars_.push_back(1.0);
  for (std::size_t k = 0; k < betas.size(); ++k) {
    const double b = betas[k];
    if (!(b > 0.0 && b < 1.0))
      throw InvalidInput("beta_" + std::to_string(k + 1) + " = " + std::to_string(b) +
                         " is outside (0, 1)");
    s.betas_.push_back(b);
    s.alpha_bars_.push_back(s.alpha_bars_.back() * (1.0 - b));
  }
  return s;
}

VarianceSchedule VarianceSchedule::sigmoid(int steps, double beta_1, double beta_T,
                                           double shape) {
  if (steps < 2)
    throw InvalidInput("sigmoid schedule needs T >= 2");
  if (!(beta_1 > 0.0 && beta_1 < beta_T && beta_T < 1.0))
    throw InvalidInput("sigmoid schedule needs 0 < beta_1 < beta_T < 1");
  if (!(shape > 0.0))
    throw InvalidInput("sigmoid schedule shape must be positive");

  const double lo = logistic(-shape);
  const double hi = logistic(shape);
  std::vector<double> betas(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t) {
    // Linear map of t onto [-1, 1] so the end points are exact.
    const double u = -1.0 + 2.0 * (t - 1) / static_cast<double>(steps - 1);
    const double frac = (logistic(shape * u) - lo) / (hi - lo);
    betas[t - 1] = beta_1 + (beta_T - beta_1) * frac;
  }
  betas.front() = beta_1;
  betas.back() = beta_T;
  return from_betas(std::move(betas));
}

PresetParameters schedule_preset(std::string_view name) {
  if (name == "paper-default")
    return {5000, 1e-7, 2e-3};
  if (name == "paper-ablation")
    return {1000, 1e-7, 9e-3};
  if (name == "desk")
    return {100, 1e-4, 0.05};
  throw InvalidInput("unknown schedule preset '" + std::string(name) + "'");
}

VarianceSchedule VarianceSchedule::preset(std::string_view name) {
  const PresetParameters p = schedule_preset(name);
  return sigmoid(p.steps, p.beta_1, p.beta_T);
}

void VarianceSchedule::check_step(int t) const {
  if (t < 1 || t > steps())
    throw InvalidInput("diffusion step " + std::to_string(t) + " outside [1, " +
                       std::to_string(steps()) + "]");
}

double VarianceSchedule::beta(int t) const {
  check_step(t);
  return betas_[t];
}

double VarianceSchedule::alpha(int t) const { return 1.0 - beta(t); }

double VarianceSchedule::alpha_bar(int t) const {
  if (t == 0)
    return 1.0;
  check_step(t);
  return alpha_bars_[t];
}

double VarianceSchedule::beta_tilde(int t) const {
  check_step(t);
  return (1.0 - alpha_bars_[t - 1]) / (1.0 - alpha_bars_[t]) * betas_[t];
}

double VarianceSchedule::gamma(int t) const {
  check_step(t);
  const double a = 1.0 - betas_[t];
  if (t == 1)
    return 1.0 / (2.0 * a);
  return betas_[t] / (2.0 * a * (1.0 - alpha_bars_[t - 1]));
}

MarginalCoefficients marginal(const VarianceSchedule &s, int t) {
  if (t < 1)
    throw InvalidInput("marginal: diffusion step " + std::to_string(t) + " must be >= 1");
  const double ab = s.alpha_bar(t);
  return {std::sqrt(ab), 1.0 - ab};
}

Conformation sample_forward(const VarianceSchedule &s, int t, const Conformation &c0,
                            const Conformation &noise) {
  check_same_shape(c0, noise, "sample_forward");
  const MarginalCoefficients m = marginal(s, t);
  return m.mean_coef * c0 + std::sqrt(m.variance) * noise;
}

Posterior posterior(const VarianceSchedule &s, int t, const Conformation &c0,
                    const Conformation &ct) {
  check_same_shape(c0, ct, "posterior");
  const double ab = s.alpha_bar(t);
  const double ab_prev = s.alpha_bar(t - 1);
  const double b = s.beta(t);
  const double coef0 = std::sqrt(ab_prev) * b / (1.0 - ab);
  const double coeft = std::sqrt(1.0 - b) * (1.0 - ab_prev) / (1.0 - ab);
  return {coef0 * c0 + coeft * ct, s.beta_tilde(t)};
}

Conformation mu_from_eps(const VarianceSchedule &s, int t, const Conformation &ct,
                         const Conformation &eps) {
  check_same_shape(ct, eps, "mu_from_eps");
  const double b = s.beta(t);
  const double ab = s.alpha_bar(t);
  return (ct - b / std::sqrt(1.0 - ab) * eps) / std::sqrt(1.0 - b);
}

}  // namespace confdiff
