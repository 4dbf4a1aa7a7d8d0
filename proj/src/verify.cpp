//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include "confdiff/gradcheck.hpp"
#include "confdiff/metrics.hpp"
#include "confdiff/sampler.hpp"
#include "confdiff/schedule.hpp"

namespace confdiff::verify {

namespace {

using Clock = std::chrono::steady_clock;

double relative(const Eigen::MatrixXd &got, const Eigen::MatrixXd &want) {
  return (got - want).norm() / (want.norm() + 1e-12);
}

CheckResult finish(std::string name, double measured, double threshold, std::string detail,
                   Clock::time_point start, bool inclusive = false) {
  CheckResult r;
  r.name = std::move(name);
  r.measured = measured;
  r.threshold = threshold;
  r.passed = std::isfinite(measured) && (inclusive ? measured <= threshold : measured < threshold);
  r.detail = std::move(detail);
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

RigidTransform random_transform(Rng &rng, double shift = 5.0) {
  std::normal_distribution<double> normal;
  RigidTransform t;
  t.rotation = random_rotation(rng);
  t.translation = shift * Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  return t;
}

Conformation random_conformation(int n, Rng &rng, double spread = 1.5) {
  return spread * standard_normal(n, rng);
}

Eigen::MatrixXd rotate_rows(const Eigen::MatrixXd &x, const Eigen::Matrix3d &r) {
  return x * r.transpose();
}

double gaussian_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace

MolecularGraph random_graph(int atoms, int num_elements, Rng &rng) {
  std::uniform_int_distribution<int> element(0, num_elements - 1);
  std::uniform_int_distribution<int> bond_type(0, 3);
  std::vector<Atom> a;
  for (int i = 0; i < atoms; ++i)
    a.push_back({element(rng)});
  std::vector<Bond> b;
  std::set<std::pair<int, int>> seen;
  for (int i = 1; i < atoms; ++i) {
    b.push_back({i - 1, i, static_cast<BondType>(bond_type(rng))});
    seen.emplace(i - 1, i);
  }
  if (atoms > 3) {
    std::uniform_int_distribution<int> pick(0, atoms - 1);
    for (int extra = 0; extra < atoms / 3; ++extra) {
      int i = pick(rng), j = pick(rng);
      if (i == j)
        continue;
      if (i > j)
        std::swap(i, j);
      if (seen.emplace(i, j).second)
        b.push_back({i, j, static_cast<BondType>(bond_type(rng))});
    }
  }
  return MolecularGraph(std::move(a), std::move(b));
}

DenoiserConfig compact_config() {
  DenoiserConfig c;
  c.num_elements = 8;
  c.hidden_dim = 12;
  c.encoder_layers = 2;
  c.gfn_layers = 2;
  c.time_dim = 8;
  c.rbf_bins = 12;
  c.radius = 4.0;
  return c;
}

CheckResult denoiser_equivariance(int trials, std::uint64_t seed, FaultInjection fault) {
  const auto start = Clock::now();
  Rng rng(seed);
  DenoiserConfig config;
  config.fault = fault;
  const DenoiserModel model = DenoiserModel::initialized(config, seed + 1);
  std::uniform_int_distribution<int> atoms(3, 12);
  std::uniform_int_distribution<int> step(1, 5000);
  double worst = 0.0;
  for (int k = 0; k < trials; ++k) {
    const MolecularGraph g = random_graph(atoms(rng), config.num_elements, rng);
    const Conformation c = random_conformation(g.atom_count(), rng);
    const RigidTransform tr = random_transform(rng);
    const int t = step(rng);
    const Conformation base = model.predict(g, c, t);
    const Conformation moved = model.predict(g, apply_transform(c, tr), t);
    worst = std::max(worst, relative(moved, rotate_rows(base, tr.rotation)));
  }
  return finish("noise-field SE(3) equivariance", worst, 1e-5,
                std::to_string(trials) + " random (graph, C, t, R, g)", start);
}

CheckResult layerwise_invariance(int trials, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  const DenoiserConfig config = compact_config();
  const DenoiserModel model = DenoiserModel::initialized(config, seed + 1);
  std::uniform_int_distribution<int> atoms(3, 9);
  double worst = 0.0;
  for (int k = 0; k < trials; ++k) {
    const MolecularGraph g = random_graph(atoms(rng), config.num_elements, rng);
    const Conformation c = random_conformation(g.atom_count(), rng, 1.0);
    const RigidTransform tr = random_transform(rng);
    const DenoiserInput a[] = {{&g, c, 3}};
    const DenoiserInput b[] = {{&g, apply_transform(c, tr), 3}};
    diff::Tape tape(false);
    DenoiserTrace ta, tb;
    eps_theta(tape, model.params, config, make_batch_graph(a, config), &ta);
    eps_theta(tape, model.params, config, make_batch_graph(b, config), &tb);
    worst = std::max(worst, relative(tb.h_encoded.value(), ta.h_encoded.value()));
    for (std::size_t l = 0; l < ta.gfn.h_layers.size(); ++l) {
      worst = std::max(worst, relative(tb.gfn.h_layers[l].value(), ta.gfn.h_layers[l].value()));
      worst = std::max(worst, relative(tb.gfn.x_layers[l].value(),
                                       rotate_rows(ta.gfn.x_layers[l].value(), tr.rotation)));
    }
  }
  return finish("per-layer h invariance / x equivariance", worst, 1e-8,
                std::to_string(trials) + " trials, every GFN layer", start);
}

CheckResult sampler_equivariance(int trials, int steps, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  const DenoiserConfig config = compact_config();
  const DenoiserModel model = DenoiserModel::initialized(config, seed + 1);
  const EpsModel eps = as_eps_model(model);
  const VarianceSchedule schedule = VarianceSchedule::sigmoid(steps, 1e-4, 0.05);
  SamplerConfig sc;
  std::uniform_int_distribution<int> atoms(3, 8);
  double worst = 0.0;
  for (int k = 0; k < trials; ++k) {
    const MolecularGraph g = random_graph(atoms(rng), config.num_elements, rng);
    const NoiseTrajectory noise = draw_noise_trajectory(g.atom_count(), steps, rng);
    const Eigen::Matrix3d r = random_rotation(rng);
    NoiseTrajectory rotated;
    rotated.prior = rotate_rows(noise.prior, r);
    for (const Conformation &z : noise.steps)
      rotated.steps.push_back(rotate_rows(z, r));
    const Conformation a = run_trajectories(eps, schedule, sc, g, std::span(&noise, 1)).front();
    const Conformation b = run_trajectories(eps, schedule, sc, g, std::span(&rotated, 1)).front();
    worst = std::max(worst, relative(b, rotate_rows(a, r)));
  }
  return finish("sampler paired-noise equivariance", worst, 1e-5,
                std::to_string(trials) + " trajectory pairs, T = " + std::to_string(steps), start);
}

CheckResult marginal_composition(int steps, int trials, std::uint64_t seed) {
  const auto start = Clock::now();
  const VarianceSchedule s = VarianceSchedule::sigmoid(steps, 1e-4, 0.05);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  const double c0 = 1.3;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < trials; ++k) {
    double x = c0;
    for (int t = 1; t <= steps; ++t)
      x = std::sqrt(s.alpha(t)) * x + std::sqrt(s.beta(t)) * normal(rng);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / trials;
  const double var = sum_sq / trials - mean * mean;
  const double want_mean = std::sqrt(s.alpha_bar(steps)) * c0;
  const double want_var = 1.0 - s.alpha_bar(steps);
  const double se = std::sqrt(var / trials);
  const double mean_z = std::abs(mean - want_mean) / se;
  const double var_rel = std::abs(var - want_var) / want_var;
  // Normalized so that 1.0 is the limit for both moments.
  const double score = std::max(mean_z / 4.0, var_rel / 0.05);
  char buf[160];
  std::snprintf(buf, sizeof buf, "k=%d, %d chains: mean off by %.2f SE, variance off by %.2f%%",
                steps, trials, mean_z, 100.0 * var_rel);
  return finish("closed-form forward marginal", score, 1.0, buf, start, true);
}

CheckResult posterior_grid(std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  std::normal_distribution<double> normal;
  const VarianceSchedule desk = VarianceSchedule::sigmoid(100, 1e-4, 0.05);
  const VarianceSchedule tiny = VarianceSchedule::from_betas({0.1, 0.2});
  struct Case {
    const VarianceSchedule *s;
    int t;
  };
  const Case cases[] = {{&tiny, 2}, {&desk, 2}, {&desk, 10}, {&desk, 100}};
  const int points = 4001;
  const double lo = -6.0, hi = 6.0, h = (hi - lo) / (points - 1);
  double worst = 0.0;
  for (const Case &cs : cases) {
    const VarianceSchedule &s = *cs.s;
    const int t = cs.t;
    const double c0 = 0.7;
    const double ct = std::sqrt(s.alpha_bar(t)) * c0 + std::sqrt(1.0 - s.alpha_bar(t)) * normal(rng);
    // Bayes rule on the grid: q(x_t | x_{t-1}) q(x_{t-1} | x_0), trapezoid normalized.
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (int k = 0; k < points; ++k) {
      const double x = lo + k * h;
      const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
      const double p = w * gaussian_pdf(ct, std::sqrt(s.alpha(t)) * x, s.beta(t)) *
                       gaussian_pdf(x, std::sqrt(s.alpha_bar(t - 1)) * c0, 1.0 - s.alpha_bar(t - 1));
      z += p;
      m1 += p * x;
      m2 += p * x * x;
    }
    const double mean = m1 / z;
    const double var = m2 / z - mean * mean;
    Conformation a(1, 3), b(1, 3);
    a.setConstant(c0);
    b.setConstant(ct);
    const Posterior post = posterior(s, t, a, b);
    worst = std::max({worst, std::abs(mean - post.mean(0, 0)), std::abs(var - post.variance)});
  }
  return finish("tractable posterior (grid Bayes)", worst, 1e-4,
                "4001-point grid on [-6, 6], t in {2 (T=2), 2, 10, 100}", start);
}

CheckResult kl_identity(int cases_per_step, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  const VarianceSchedule s = VarianceSchedule::preset("desk");
  double worst = 0.0;
  for (int t : {2, 10, s.steps()}) {
    for (int k = 0; k < cases_per_step; ++k) {
      const int n = 5;
      const Conformation c0 = standard_normal(n, rng);
      const Conformation eps = standard_normal(n, rng);
      const Conformation eps_hat = standard_normal(n, rng);
      const Conformation ct = sample_forward(s, t, c0, eps);
      const Posterior q = posterior(s, t, c0, ct);
      const Conformation mu_p = mu_from_eps(s, t, ct, eps_hat);
      // General diagonal-Gaussian KL(N(mu_q, v_q) || N(mu_p, v_p)) with v_q = v_p = beta_tilde.
      const double vq = q.variance, vp = s.beta_tilde(t);
      double kl = 0.0;
      for (Eigen::Index i = 0; i < q.mean.size(); ++i) {
        const double d = q.mean.data()[i] - mu_p.data()[i];
        kl += 0.5 * (vq / vp + d * d / vp - 1.0 + std::log(vp / vq));
      }
      const double weighted = s.gamma(t) * (eps - eps_hat).squaredNorm();
      worst = std::max(worst, std::abs(kl - weighted) / std::abs(weighted));
    }
  }
  return finish("KL equals gamma-weighted noise L2", worst, 1e-8,
                std::to_string(cases_per_step) + " cases per t in {2, 10, T}", start);
}

CheckResult projector_algebra() {
  const auto start = Clock::now();
  Rng rng(11);
  double worst = 0.0;
  for (int n : {1, 2, 5, 20}) {
    const Eigen::MatrixXd q = com_free_projector(n);
    worst = std::max(worst, (q * q - q).cwiseAbs().maxCoeff());
    worst = std::max(worst, (q.transpose() - q).cwiseAbs().maxCoeff());
    const Conformation y = project_com_free(standard_normal(n, rng));
    const Eigen::VectorXd vy = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
    worst = std::max(worst, (q * vy - vy).cwiseAbs().maxCoeff());
    const Conformation c = standard_normal(n, rng);
    const Eigen::VectorXd vc = Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
    const Conformation pc = project_com_free(c);
    worst = std::max(worst,
                     (q * vc - Eigen::Map<const Eigen::VectorXd>(pc.data(), pc.size())).cwiseAbs().maxCoeff());
  }
  return finish("CoM-free projector algebra", worst, 1e-12,
                "Q^2 = Q, Q^T = Q, Qy = y, Qc = centered c; n in {1, 2, 5, 20}", start, true);
}

CheckResult gradient_check(TargetKind kind, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  const DenoiserConfig config = compact_config();
  DenoiserModel model = DenoiserModel::initialized(config, seed + 1);
  const VarianceSchedule s = VarianceSchedule::preset("desk");
  const MolecularGraph g = random_graph(4, config.num_elements, rng);
  const Conformation c0 = random_conformation(4, rng, 1.0);
  std::vector<TrainingExample> batch;
  batch.push_back(make_training_example(s, kind, Weighting::kUnit, g, c0, 17, rng(), config.radius));
  batch.push_back(make_training_example(s, kind, Weighting::kElbo, g, c0, 63, rng(), config.radius));
  std::vector<DenoiserInput> inputs;
  for (const TrainingExample &ex : batch)
    inputs.push_back({ex.graph, ex.ct, ex.t});
  const BatchGraph bg = make_batch_graph(inputs, config);
  const diff::GradientCheckReport report = diff::check_parameter_gradients(
      [&](diff::Tape &tape, const diff::ParameterStore &params) {
        return loss(tape, batch, eps_theta(tape, params, config, bg), LossReduction::kPerAtom);
      },
      model.params, 1e-5);
  std::string worst_name;
  for (const auto &e : report.entries)
    if (e.relative_error == report.worst())
      worst_name = e.name;
  return finish(std::string("denoiser gradient check (") + std::string(target_kind_name(kind)) + ")",
                report.worst(), 1e-4,
                std::to_string(report.entries.size()) + " parameter tensors, worst " + worst_name,
                start);
}

namespace {

Conformation target_for(TargetKind kind, const VarianceSchedule &s, int t, const MolecularGraph &g,
                        const Conformation &c0, const Conformation &ct, double radius) {
  if (kind == TargetKind::kAligned)
    return make_aligned_target(s, t, c0, ct);
  return make_chainrule_target(s, t, g, c0, ct, build_neighbor_list(g, c0, radius).edges);
}

}  // namespace

CheckResult objective_invariance(int trials, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  const DenoiserConfig config = compact_config();
  const DenoiserModel model = DenoiserModel::initialized(config, seed + 1);
  const VarianceSchedule s = VarianceSchedule::preset("desk");
  std::uniform_int_distribution<int> atoms(3, 9);
  std::uniform_int_distribution<int> step(1, s.steps());
  double worst = 0.0;
  for (int k = 0; k < trials; ++k) {
    const MolecularGraph g = random_graph(atoms(rng), config.num_elements, rng);
    const Conformation c0 = random_conformation(g.atom_count(), rng, 1.0);
    const int t = step(rng);
    const Conformation ct = sample_forward(s, t, c0, standard_normal(g.atom_count(), rng));
    const RigidTransform tr = random_transform(rng);
    const Conformation c0m = apply_transform(c0, tr);
    const Conformation ctm = apply_transform(ct, tr);
    for (TargetKind kind : {TargetKind::kAligned, TargetKind::kChainRule}) {
      const double a =
          (target_for(kind, s, t, g, c0, ct, config.radius) - model.predict(g, ct, t)).squaredNorm();
      const double b =
          (target_for(kind, s, t, g, c0m, ctm, config.radius) - model.predict(g, ctm, t)).squaredNorm();
      worst = std::max(worst, std::abs(a - b) / std::abs(a));
    }
  }
  return finish("objective rigid-motion invariance", worst, 1e-6,
                std::to_string(trials) + " trials, aligned and chain-rule targets", start);
}

CheckResult metrics_oracle(int pairs, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  std::uniform_int_distribution<int> atoms(3, 6), refs(1, 5), gens(1, 10);
  int mismatches = 0;
  int monotonic_violations = 0;
  for (int k = 0; k < pairs; ++k) {
    const int n = atoms(rng);
    ConformerSet sr, sg;
    const int nr = refs(rng), ng = gens(rng);
    for (int i = 0; i < nr; ++i)
      sr.push_back(standard_normal(n, rng));
    for (int i = 0; i < ng; ++i)
      sg.push_back(standard_normal(n, rng));
    const Eigen::MatrixXd m = rmsd_matrix(sg, sr);
    double prev_cr = -1.0, prev_cp = -1.0;
    for (int d = 1; d <= 10; ++d) {
      const double delta = 0.15 * d;
      // Brute force straight from pairwise RMSD.
      int covered_r = 0, covered_p = 0;
      double mat_r = 0.0, mat_p = 0.0;
      for (int r = 0; r < nr; ++r) {
        double best = rmsd(sr[r], sg[0]);
        for (int g = 1; g < ng; ++g)
          best = std::min(best, rmsd(sr[r], sg[g]));
        covered_r += best <= delta;
        mat_r += best;
      }
      for (int g = 0; g < ng; ++g) {
        double best = rmsd(sr[0], sg[g]);
        for (int r = 1; r < nr; ++r)
          best = std::min(best, rmsd(sr[r], sg[g]));
        covered_p += best <= delta;
        mat_p += best;
      }
      const CoverageMatching rec = cov_mat_recall(m, delta);
      const CoverageMatching prec = cov_mat_precision(m, delta);
      mismatches += rec.coverage != 100.0 * covered_r / nr;
      mismatches += rec.matching != mat_r / nr;
      mismatches += prec.coverage != 100.0 * covered_p / ng;
      mismatches += prec.matching != mat_p / ng;
      monotonic_violations += rec.coverage < prev_cr;
      monotonic_violations += prec.coverage < prev_cp;
      prev_cr = rec.coverage;
      prev_cp = prec.coverage;
    }
  }
  return finish("coverage / matching brute-force oracle", mismatches + monotonic_violations, 0.0,
                std::to_string(pairs) + " set pairs x 10 thresholds; " + std::to_string(mismatches) +
                    " mismatches, " + std::to_string(monotonic_violations) +
                    " monotonicity violations",
                start, true);
}

CheckResult kabsch_recovery(int trials, std::uint64_t seed) {
  const auto start = Clock::now();
  Rng rng(seed);
  std::uniform_int_distribution<int> atoms(3, 12);
  std::normal_distribution<double> normal;
  double worst_rmsd = 0.0, worst_det = 0.0;
  for (int k = 0; k < trials; ++k) {
    const int n = atoms(rng);
    Conformation target = standard_normal(n, rng);
    const int kind = k % 3;  // general, planar, collinear
    if (kind == 1) {
      target.col(2).setZero();
      target = target * random_rotation(rng).transpose();
    } else if (kind == 2) {
      const Eigen::RowVector3d dir = Eigen::RowVector3d(normal(rng), normal(rng), normal(rng)).normalized();
      for (int i = 0; i < n; ++i)
        target.row(i) = normal(rng) * dir;
    }
    const RigidTransform tr = random_transform(rng);
    const Conformation mobile = apply_transform(target, tr);
    const Alignment al = kabsch_align(mobile, target);
    worst_rmsd = std::max(worst_rmsd, std::sqrt((al.aligned - target).squaredNorm() / n));
    worst_det = std::max(worst_det, std::abs(al.transform.rotation.determinant() - 1.0));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d trials (general/planar/collinear), worst |det R - 1| = %.2e",
                trials, worst_det);
  return finish("Kabsch rigid-transform recovery", std::max(worst_rmsd, worst_det), 1e-9, buf,
                start);
}

std::vector<CheckResult> run_suite(const SuiteOptions &options) {
  const std::uint64_t s = options.seed;
  const int scale = options.quick ? 5 : 1;
  std::vector<CheckResult> out;
  out.push_back(denoiser_equivariance(100 / scale, s, options.fault));
  out.push_back(layerwise_invariance(20 / scale, s + 1));
  out.push_back(sampler_equivariance(20 / scale, 100, s + 2));
  out.push_back(marginal_composition(100, 100000 / scale, s + 3));
  out.push_back(posterior_grid(s + 4));
  out.push_back(kl_identity(50 / scale, s + 5));
  out.push_back(projector_algebra());
  out.push_back(gradient_check(TargetKind::kAligned, s + 6));
  out.push_back(gradient_check(TargetKind::kChainRule, s + 7));
  out.push_back(objective_invariance(50 / scale, s + 8));
  out.push_back(metrics_oracle(20, s + 9));
  out.push_back(kabsch_recovery(1000 / scale, s + 10));
  return out;
}

std::string format_ledger(std::span<const CheckResult> results) {
  std::ostringstream os;
  for (const CheckResult &r : results) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "measured %.3e vs %.1e  (%.2fs)", r.measured, r.threshold,
                  r.seconds);
    os << (r.passed ? "PASS" : "FAIL") << "  " << r.name << "  " << buf << "  " << r.detail
       << '\n';
  }
  return os.str();
}

bool all_passed(std::span<const CheckResult> results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult &r) { return r.passed; });
}

}  // namespace confdiff::verify
