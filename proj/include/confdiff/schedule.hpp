//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string_view>
#include <vector>

#include "confdiff/geom.hpp"

namespace confdiff {

/// Fixed forward-noise schedule beta_1..beta_T and every quantity derived from
/// it. Steps are 1-based; alpha_bar(0) == 1 by convention.
class VarianceSchedule {
 public:
  /// Throws InvalidInput unless every beta lies in (0, 1) and T >= 1.
  static VarianceSchedule from_betas(std::vector<double> betas);

  /// beta_t = b1 + (bT - b1) * (sig(s(2t/T - 1)) - sig(-s)) / (sig(s) - sig(-s)).
  static VarianceSchedule sigmoid(int steps, double beta_1, double beta_T,
                                  double shape = 6.0);

  /// "paper-default", "paper-ablation" or "desk".
  static VarianceSchedule preset(std::string_view name);

  int steps() const { return static_cast<int>(betas_.size()) - 1; }

  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;  // t in [0, T]
  double beta_tilde(int t) const;
  /// ELBO weight: beta_t / (2 alpha_t (1 - alpha_bar_{t-1})) for t > 1, 1 / (2 alpha_1) at t = 1.
  double gamma(int t) const;

 private:
  VarianceSchedule() = default;
  void check_step(int t) const;

  // Index 0 is padding so that index t holds step t.
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

struct PresetParameters {
  int steps;
  double beta_1;
  double beta_T;
};

PresetParameters schedule_preset(std::string_view name);

struct MarginalCoefficients {
  double mean_coef;  // sqrt(alpha_bar_t)
  double variance;   // 1 - alpha_bar_t
};

/// q(C^t | C^0) = N(mean_coef C^0, variance I).
MarginalCoefficients marginal(const VarianceSchedule &s, int t);

/// Reparameterized draw sqrt(alpha_bar_t) C^0 + sqrt(1 - alpha_bar_t) noise.
Conformation sample_forward(const VarianceSchedule &s, int t, const Conformation &c0,
                            const Conformation &noise);

struct Posterior {
  Conformation mean;
  double variance;
};

/// q(C^{t-1} | C^t, C^0).
Posterior posterior(const VarianceSchedule &s, int t, const Conformation &c0,
                    const Conformation &ct);

/// Reverse-kernel mean (C^t - beta_t / sqrt(1 - alpha_bar_t) eps) / sqrt(alpha_t).
Conformation mu_from_eps(const VarianceSchedule &s, int t, const Conformation &ct,
                         const Conformation &eps);

}  // namespace confdiff
