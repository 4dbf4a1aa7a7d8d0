//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "confdiff/denoiser.hpp"
#include "confdiff/geom.hpp"
#include "confdiff/molgraph.hpp"
#include "confdiff/schedule.hpp"

namespace confdiff {

/// Noise predictor evaluated for several conformations of one graph at step t.
/// The sampler calls it once per step with every trajectory of the run.
using EpsModel = std::function<std::vector<Conformation>(
    const MolecularGraph &, std::span<const Conformation>, int t)>;

EpsModel as_eps_model(const DenoiserModel &model);

enum class SigmaMode {
  kPosterior,  // sigma_t^2 = beta_tilde_t
  kForward,    // sigma_t^2 = beta_t
};

struct SamplerConfig {
  SigmaMode sigma_mode = SigmaMode::kPosterior;
  std::uint64_t seed = 0;
  int num_samples = 1;
  std::optional<double> clip;  // per-step bound on |coordinate|
  bool noise_at_t1 = false;    // literal final-step noise when set
};

double sampler_sigma(const VarianceSchedule &s, int t, const SamplerConfig &config);

/// Standard normal n x 3 draw moved to zero center of mass.
Conformation sample_prior(int n, Rng &rng);

/// log of the isotropic standard normal density evaluated at the centered input.
double com_free_log_density(const Conformation &c);

/// One ancestral step: center C^t, form the reverse mean from eps, add sigma_t z.
/// z is ignored at t = 1 unless config.noise_at_t1.
Conformation reverse_step_with_noise(const VarianceSchedule &s, const SamplerConfig &config,
                                     const Conformation &ct, const Conformation &eps, int t,
                                     const Conformation &z);

Conformation reverse_step(const EpsModel &model, const VarianceSchedule &s,
                          const SamplerConfig &config, const MolecularGraph &g,
                          const Conformation &ct, int t, Rng &rng);

/// Every random draw of one trajectory: the prior sample and z_t for t = 1..T.
struct NoiseTrajectory {
  Conformation prior;
  std::vector<Conformation> steps;  // steps[t - 1] is z_t
};

NoiseTrajectory draw_noise_trajectory(int n, int steps, Rng &rng);

/// Runs every trajectory from its prior through t = T..1 in lockstep.
std::vector<Conformation> run_trajectories(const EpsModel &model, const VarianceSchedule &s,
                                           const SamplerConfig &config, const MolecularGraph &g,
                                           std::span<const NoiseTrajectory> noise);

/// Conformer i draws its noise from an rng seeded by (config.seed, i).
std::vector<Conformation> sample(const EpsModel &model, const VarianceSchedule &s,
                                 const MolecularGraph &g, const SamplerConfig &config);

}  // namespace confdiff
