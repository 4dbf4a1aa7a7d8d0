//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "confdiff/geom.hpp"

namespace confdiff {

using ConformerSet = std::vector<Conformation>;

struct MetricsConfig {
  double delta = 0.5;
  double generation_ratio = 2.0;  // expected |S_g| / |S_r|

  void validate() const;
};

/// Entry (r, g) = rmsd(reference r, generated g).
Eigen::MatrixXd rmsd_matrix(const ConformerSet &generated, const ConformerSet &reference);

struct CoverageMatching {
  double coverage;  // percent in [0, 100]
  double matching;  // mean minimum RMSD
};

/// Per reference (row): coverage counts row minima <= delta, matching averages them.
CoverageMatching cov_mat_recall(const Eigen::MatrixXd &m, double delta);

/// Same with generated conformers (columns) in the role of the rows.
CoverageMatching cov_mat_precision(const Eigen::MatrixXd &m, double delta);

struct MoleculeMetrics {
  std::string id;
  double cov_r = 0.0;
  double mat_r = 0.0;
  double cov_p = 0.0;
  double mat_p = 0.0;
};

MoleculeMetrics evaluate_molecule(std::string id, const ConformerSet &generated,
                                  const ConformerSet &reference, double delta);

struct SummaryStat {
  double mean = 0.0;
  double median = 0.0;
};

struct MetricsReport {
  double delta = 0.0;
  std::vector<MoleculeMetrics> molecules;  // sorted by id
  SummaryStat cov_r, mat_r, cov_p, mat_p;
};

/// Mean and median (midpoint for even counts) of each metric over molecules.
MetricsReport evaluate_suite(std::vector<MoleculeMetrics> results, double delta);

/// Percentages and lengths printed with two and four decimals respectively.
std::string report_to_csv(const MetricsReport &report);
std::string report_to_json(const MetricsReport &report);

}  // namespace confdiff
