//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>

#include <json.hpp>

#include "confdiff/errors.hpp"
#include "confdiff/metrics.hpp"
#include "confdiff/verify.hpp"

namespace confdiff {
namespace {

ConformerSet random_set(int count, int atoms, Rng &rng) {
  ConformerSet s;
  for (int i = 0; i < count; ++i)
    s.push_back(standard_normal(atoms, rng));
  return s;
}

TEST(RmsdMatrix, SelfComparisonHasZeroDiagonal) {
  Rng rng(1);
  const ConformerSet s = random_set(4, 5, rng);
  const Eigen::MatrixXd m = rmsd_matrix(s, s);
  EXPECT_LT(m.diagonal().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(m(0, 1), 0.1);
}

TEST(RmsdMatrix, RigidCopiesGiveZeros) {
  Rng rng(2);
  const Conformation base = standard_normal(6, rng);
  ConformerSet a, b;
  for (int i = 0; i < 3; ++i) {
    a.push_back(apply_transform(base, {random_rotation(rng), Eigen::Vector3d(i, 0, 1)}));
    b.push_back(apply_transform(base, {random_rotation(rng), Eigen::Vector3d(0, i, -1)}));
  }
  EXPECT_LT(rmsd_matrix(a, b).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RmsdMatrix, ShapeIsReferenceByGeneratedAndEntriesRecompute) {
  Rng rng(3);
  const ConformerSet gen = random_set(4, 5, rng), ref = random_set(3, 5, rng);
  const Eigen::MatrixXd m = rmsd_matrix(gen, ref);
  ASSERT_EQ(m.rows(), 3);
  ASSERT_EQ(m.cols(), 4);
  for (int r = 0; r < 3; ++r)
    for (int g = 0; g < 4; ++g)
      EXPECT_NEAR(m(r, g), rmsd(gen[g], ref[r]), 1e-12);
}

TEST(Coverage, HandWorkedMatrix) {
  Eigen::MatrixXd m(2, 2);
  m << 0.4, 0.9, 0.7, 0.6;
  const CoverageMatching r = cov_mat_recall(m, 0.5);
  EXPECT_DOUBLE_EQ(r.coverage, 50.0);
  EXPECT_DOUBLE_EQ(r.matching, 0.5);
  const CoverageMatching p = cov_mat_precision(m, 0.5);
  EXPECT_DOUBLE_EQ(p.coverage, 50.0);
  EXPECT_DOUBLE_EQ(p.matching, 0.5);
  EXPECT_DOUBLE_EQ(cov_mat_recall(m, std::numeric_limits<double>::infinity()).coverage, 100.0);
}

TEST(Coverage, ThresholdIsInclusive) {
  Eigen::MatrixXd m(1, 1);
  m << 0.5;
  EXPECT_DOUBLE_EQ(cov_mat_recall(m, 0.5).coverage, 100.0);
}

TEST(Coverage, SelfMatchGivesFullRecall) {
  Rng rng(4);
  const Conformation a = standard_normal(5, rng);
  const Conformation b = 3.0 * standard_normal(5, rng);
  const ConformerSet ref = {a}, gen = {a, b};
  ASSERT_GT(rmsd(a, b), 0.5);
  const Eigen::MatrixXd m = rmsd_matrix(gen, ref);
  const CoverageMatching r = cov_mat_recall(m, 0.5);
  EXPECT_DOUBLE_EQ(r.coverage, 100.0);
  EXPECT_NEAR(r.matching, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(cov_mat_precision(m, 0.5).coverage, 50.0);
}

TEST(Coverage, SymmetricSetsGiveEqualRecallAndPrecision) {
  Rng rng(5);
  const ConformerSet s = random_set(4, 5, rng);
  ConformerSet t = random_set(4, 5, rng);
  const Eigen::MatrixXd m = rmsd_matrix(s, t);
  const Eigen::MatrixXd mt = rmsd_matrix(t, s);
  EXPECT_DOUBLE_EQ(cov_mat_recall(m, 1.0).coverage, cov_mat_precision(mt, 1.0).coverage);
  EXPECT_DOUBLE_EQ(cov_mat_recall(m, 1.0).matching, cov_mat_precision(mt, 1.0).matching);
}

TEST(Coverage, SingleHubGivesFullPrecisionLowRecall) {
  Eigen::MatrixXd m(4, 1);
  m << 0.1, 0.9, 1.2, 2.0;
  EXPECT_DOUBLE_EQ(cov_mat_precision(m, 0.5).coverage, 100.0);
  EXPECT_DOUBLE_EQ(cov_mat_recall(m, 0.5).coverage, 25.0);
}

TEST(Coverage, EmptySetThrows) {
  EXPECT_THROW(cov_mat_recall(Eigen::MatrixXd(0, 3), 0.5), InvalidInput);
  EXPECT_THROW(cov_mat_precision(Eigen::MatrixXd(2, 0), 0.5), InvalidInput);
}

TEST(Suite, MeanAndMedian) {
  std::vector<MoleculeMetrics> rows = {{"b", 20, 0, 0, 0}, {"a", 10, 0, 0, 0}, {"c", 90, 0, 0, 0}};
  const MetricsReport r = evaluate_suite(rows, 0.5);
  EXPECT_DOUBLE_EQ(r.cov_r.mean, 40.0);
  EXPECT_DOUBLE_EQ(r.cov_r.median, 20.0);
  EXPECT_EQ(r.molecules.front().id, "a");
  const MetricsReport one = evaluate_suite({{"x", 33, 0.2, 44, 0.3}}, 0.5);
  EXPECT_DOUBLE_EQ(one.cov_p.mean, 44.0);
  EXPECT_DOUBLE_EQ(one.cov_p.median, 44.0);
  const MetricsReport even = evaluate_suite({{"a", 10, 0, 0, 0}, {"b", 30, 0, 0, 0}}, 0.5);
  EXPECT_DOUBLE_EQ(even.cov_r.median, 20.0);
}

TEST(Suite, PermutationInvariant) {
  std::vector<MoleculeMetrics> rows = {
      {"m1", 10, 0.3, 80, 0.4}, {"m2", 50, 0.2, 30, 0.1}, {"m3", 70, 0.5, 60, 0.6}, {"m4", 20, 0.9, 10, 0.2}};
  const std::string base = report_to_json(evaluate_suite(rows, 0.5));
  std::reverse(rows.begin(), rows.end());
  EXPECT_EQ(report_to_json(evaluate_suite(rows, 0.5)), base);
  std::swap(rows[0], rows[2]);
  EXPECT_EQ(report_to_csv(evaluate_suite(rows, 0.5)),
            report_to_csv(evaluate_suite({rows[3], rows[1], rows[0], rows[2]}, 0.5)));
}

TEST(Report, CsvAndJsonLayout) {
  const MetricsReport r = evaluate_suite({{"a", 100, 0.12345, 50, 0.5}}, 0.25);
  const std::string csv = report_to_csv(r);
  EXPECT_NE(csv.find("molecule,cov_r,mat_r,cov_p,mat_p\n"), std::string::npos);
  EXPECT_NE(csv.find("a,100.00,0.1235,50.00,0.5000\n"), std::string::npos);
  EXPECT_NE(csv.find("#median,"), std::string::npos);
  const auto j = nlohmann::json::parse(report_to_json(r));
  EXPECT_EQ(j["format"], "confdiff-metrics");
  EXPECT_DOUBLE_EQ(j["delta"].get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(j["summary"]["mat_r"]["mean"].get<double>(), 0.12345);
}

TEST(MetricsOracle, BruteForceAndMonotonicity) {
  const verify::CheckResult r = verify::metrics_oracle(20, 17);
  EXPECT_TRUE(r.passed) << r.detail;
}

}  // namespace
}  // namespace confdiff
