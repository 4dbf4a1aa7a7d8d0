//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "confdiff/denoiser.hpp"
#include "confdiff/geom.hpp"
#include "confdiff/molgraph.hpp"
#include "confdiff/objective.hpp"

// Executable invariant checks. Each check compares the library against an
// independent route (brute force, numerical integration, finite differences,
// transform-and-compare) and reports the worst measured deviation.

namespace confdiff::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst deviation observed
  double threshold = 0.0;  // pass iff measured < threshold (or <= for exact checks)
  std::string detail;
  double seconds = 0.0;
};

/// Random connected chain with a few extra bonds and random element codes.
MolecularGraph random_graph(int atoms, int num_elements, Rng &rng);

/// Small denoiser used where a full-width network would only cost time.
DenoiserConfig compact_config();

CheckResult denoiser_equivariance(int trials, std::uint64_t seed,
                                  FaultInjection fault = FaultInjection::kNone);
CheckResult layerwise_invariance(int trials, std::uint64_t seed);
CheckResult sampler_equivariance(int trials, int steps, std::uint64_t seed);
CheckResult marginal_composition(int steps, int trials, std::uint64_t seed);
CheckResult posterior_grid(std::uint64_t seed);
CheckResult kl_identity(int cases_per_step, std::uint64_t seed);
CheckResult projector_algebra();
CheckResult gradient_check(TargetKind kind, std::uint64_t seed);
CheckResult objective_invariance(int trials, std::uint64_t seed);
CheckResult metrics_oracle(int pairs, std::uint64_t seed);
CheckResult kabsch_recovery(int trials, std::uint64_t seed);

struct SuiteOptions {
  std::uint64_t seed = 7;
  FaultInjection fault = FaultInjection::kNone;
  bool quick = false;  // fewer trials per check
};

std::vector<CheckResult> run_suite(const SuiteOptions &options);

/// One line per check: PASS/FAIL, name, measured vs threshold, detail.
std::string format_ledger(std::span<const CheckResult> results);

bool all_passed(std::span<const CheckResult> results);

}  // namespace confdiff::verify
