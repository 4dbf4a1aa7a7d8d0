//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/sampler.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "confdiff/errors.hpp"

namespace confdiff {

EpsModel as_eps_model(const DenoiserModel &model) {
  return [&model](const MolecularGraph &g, std::span<const Conformation> coords, int t) {
    return model.predict(g, coords, t);
  };
}

double sampler_sigma(const VarianceSchedule &s, int t, const SamplerConfig &config) {
  return std::sqrt(config.sigma_mode == SigmaMode::kPosterior ? s.beta_tilde(t) : s.beta(t));
}

Conformation sample_prior(int n, Rng &rng) {
  if (n < 1)
    throw InvalidInput("sample_prior: atom count must be positive");
  return project_com_free(standard_normal(n, rng));
}

double com_free_log_density(const Conformation &c) {
  const Conformation y = project_com_free(c);
  const double dim = static_cast<double>(y.size());
  return -0.5 * dim * std::log(2.0 * std::numbers::pi) - 0.5 * y.squaredNorm();
}

Conformation reverse_step_with_noise(const VarianceSchedule &s, const SamplerConfig &config,
                                     const Conformation &ct, const Conformation &eps, int t,
                                     const Conformation &z) {
  if (!eps.allFinite())
    throw SamplingError("non-finite noise prediction at step " + std::to_string(t));
  Conformation next = mu_from_eps(s, t, ct, eps);
  if (t > 1 || config.noise_at_t1)
    next += sampler_sigma(s, t, config) * z;
  if (config.clip)
    next = next.cwiseMax(-*config.clip).cwiseMin(*config.clip);
  return next;
}

Conformation reverse_step(const EpsModel &model, const VarianceSchedule &s,
                          const SamplerConfig &config, const MolecularGraph &g,
                          const Conformation &ct, int t, Rng &rng) {
  const Conformation centered = project_com_free(ct);
  const std::vector<Conformation> eps = model(g, std::span<const Conformation>(&centered, 1), t);
  Conformation z = Conformation::Zero(ct.rows(), 3);
  if (t > 1 || config.noise_at_t1)
    z = standard_normal(static_cast<int>(ct.rows()), rng);
  return reverse_step_with_noise(s, config, centered, eps.at(0), t, z);
}

NoiseTrajectory draw_noise_trajectory(int n, int steps, Rng &rng) {
  NoiseTrajectory out;
  out.prior = sample_prior(n, rng);
  out.steps.reserve(static_cast<std::size_t>(steps));
  for (int t = 1; t <= steps; ++t)
    out.steps.push_back(standard_normal(n, rng));
  return out;
}

std::vector<Conformation> run_trajectories(const EpsModel &model, const VarianceSchedule &s,
                                           const SamplerConfig &config, const MolecularGraph &g,
                                           std::span<const NoiseTrajectory> noise) {
  const int T = s.steps();
  std::vector<Conformation> states;
  states.reserve(noise.size());
  for (const NoiseTrajectory &traj : noise) {
    if (traj.prior.rows() != g.atom_count() || static_cast<int>(traj.steps.size()) != T)
      throw InvalidInput("noise trajectory does not match graph or schedule");
    states.push_back(traj.prior);
  }
  for (int t = T; t >= 1; --t) {
    for (Conformation &c : states)
      c = project_com_free(c);
    const std::vector<Conformation> eps = model(g, states, t);
    if (eps.size() != states.size())
      throw SamplingError("model returned " + std::to_string(eps.size()) + " fields for " +
                          std::to_string(states.size()) + " conformations at step " +
                          std::to_string(t));
    for (std::size_t k = 0; k < states.size(); ++k)
      states[k] = reverse_step_with_noise(s, config, states[k], eps[k], t, noise[k].steps[t - 1]);
  }
  return states;
}

std::vector<Conformation> sample(const EpsModel &model, const VarianceSchedule &s,
                                 const MolecularGraph &g, const SamplerConfig &config) {
  if (config.num_samples < 1)
    throw InvalidInput("sample: num_samples must be positive");
  std::vector<NoiseTrajectory> noise;
  noise.reserve(static_cast<std::size_t>(config.num_samples));
  for (int i = 0; i < config.num_samples; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    Rng rng(seq);
    noise.push_back(draw_noise_trajectory(g.atom_count(), s.steps(), rng));
  }
  return run_trajectories(model, s, config, g, noise);
}

}  // namespace confdiff
