//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "confdiff/errors.hpp"

namespace confdiff {

void MetricsConfig::validate() const {
  if (!(delta > 0.0))
    throw InvalidInput("metrics delta must be positive");
  if (!(generation_ratio >= 1.0))
    throw InvalidInput("generation ratio must be >= 1");
}

Eigen::MatrixXd rmsd_matrix(const ConformerSet &generated, const ConformerSet &reference) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(reference.size()),
                    static_cast<Eigen::Index>(generated.size()));
  for (std::size_t r = 0; r < reference.size(); ++r)
    for (std::size_t g = 0; g < generated.size(); ++g)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(g)) =
          rmsd(reference[r], generated[g]);
  return m;
}

namespace {

CoverageMatching row_minima_stats(const Eigen::MatrixXd &m, double delta) {
  int covered = 0;
  double total = 0.0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double best = m.row(r).minCoeff();
    if (best <= delta)
      ++covered;
    total += best;
  }
  return {100.0 * covered / static_cast<double>(m.rows()),
          total / static_cast<double>(m.rows())};
}

}  // namespace

CoverageMatching cov_mat_recall(const Eigen::MatrixXd &m, double delta) {
  if (m.rows() == 0)
    throw InvalidInput("cov_mat_recall: reference set is empty");
  if (m.cols() == 0)
    throw InvalidInput("cov_mat_recall: generated set is empty");
  return row_minima_stats(m, delta);
}

CoverageMatching cov_mat_precision(const Eigen::MatrixXd &m, double delta) {
  if (m.cols() == 0)
    throw InvalidInput("cov_mat_precision: generated set is empty");
  if (m.rows() == 0)
    throw InvalidInput("cov_mat_precision: reference set is empty");
  return row_minima_stats(m.transpose(), delta);
}

MoleculeMetrics evaluate_molecule(std::string id, const ConformerSet &generated,
                                  const ConformerSet &reference, double delta) {
  const Eigen::MatrixXd m = rmsd_matrix(generated, reference);
  const CoverageMatching rec = cov_mat_recall(m, delta);
  const CoverageMatching prec = cov_mat_precision(m, delta);
  return {std::move(id), rec.coverage, rec.matching, prec.coverage, prec.matching};
}

namespace {

SummaryStat summarize(std::vector<double> values) {
  SummaryStat s;
  if (values.empty())
    return s;
  double total = 0.0;
  for (double v : values)
    total += v;
  s.mean = total / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

MetricsReport evaluate_suite(std::vector<MoleculeMetrics> results, double delta) {
  if (results.empty())
    throw InvalidInput("evaluate_suite: no molecules");
  std::sort(results.begin(), results.end(),
            [](const MoleculeMetrics &a, const MoleculeMetrics &b) { return a.id < b.id; });
  MetricsReport report;
  report.delta = delta;
  std::vector<double> cr, mr, cp, mp;
  for (const MoleculeMetrics &m : results) {
    cr.push_back(m.cov_r);
    mr.push_back(m.mat_r);
    cp.push_back(m.cov_p);
    mp.push_back(m.mat_p);
  }
  report.cov_r = summarize(cr);
  report.mat_r = summarize(mr);
  report.cov_p = summarize(cp);
  report.mat_p = summarize(mp);
  report.molecules = std::move(results);
  return report;
}

std::string report_to_csv(const MetricsReport &report) {
  std::ostringstream os;
  os << "molecule,cov_r,mat_r,cov_p,mat_p\n";
  for (const MoleculeMetrics &m : report.molecules)
    os << m.id << ',' << fixed(m.cov_r, 2) << ',' << fixed(m.mat_r, 4) << ','
       << fixed(m.cov_p, 2) << ',' << fixed(m.mat_p, 4) << '\n';
  os << "#mean," << fixed(report.cov_r.mean, 2) << ',' << fixed(report.mat_r.mean, 4) << ','
     << fixed(report.cov_p.mean, 2) << ',' << fixed(report.mat_p.mean, 4) << '\n';
  os << "#median," << fixed(report.cov_r.median, 2) << ',' << fixed(report.mat_r.median, 4)
     << ',' << fixed(report.cov_p.median, 2) << ',' << fixed(report.mat_p.median, 4) << '\n';
  return os.str();
}

std::string report_to_json(const MetricsReport &report) {
  using nlohmann::json;
  json mols = json::array();
  for (const MoleculeMetrics &m : report.molecules)
    mols.push_back({{"id", m.id},
                    {"cov_r", m.cov_r},
                    {"mat_r", m.mat_r},
                    {"cov_p", m.cov_p},
                    {"mat_p", m.mat_p}});
  auto stat = [](const SummaryStat &s) { return json{{"mean", s.mean}, {"median", s.median}}; };
  json doc = {{"format", "confdiff-metrics"},
              {"version", "1.0"},
              {"delta", report.delta},
              {"molecules", mols},
              {"summary",
               {{"cov_r", stat(report.cov_r)},
                {"mat_r", stat(report.mat_r)},
                {"cov_p", stat(report.cov_p)},
                {"mat_p", stat(report.mat_p)}}}};
  return doc.dump(2) + "\n";
}

}  // namespace confdiff
