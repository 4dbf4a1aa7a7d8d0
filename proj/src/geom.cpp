//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/geom.hpp"

#include <cmath>
#include <string>

#include "confdiff/errors.hpp"

namespace confdiff {

RigidTransform RigidTransform::then(const RigidTransform &next) const {
  RigidTransform out;
  out.rotation = next.rotation * rotation;
  out.translation = next.rotation * translation + next.translation;
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

void validate_conformation(const Conformation &c) {
  if (c.rows() == 0)
    throw InvalidInput("conformation has no atoms");
  if (!c.allFinite())
    throw InvalidInput("conformation contains non-finite coordinates");
}

Eigen::Vector3d center_of_mass(const Conformation &c) {
  if (c.rows() == 0)
    throw InvalidInput("center_of_mass: empty conformation");
  return c.colwise().mean().transpose();
}

Conformation project_com_free(const Conformation &c) {
  const Eigen::RowVector3d com = center_of_mass(c).transpose();
  return c.rowwise() - com;
}

Eigen::MatrixXd com_free_projector(int n) {
  if (n < 1)
    throw InvalidInput("com_free_projector: n must be positive");
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) -
      Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  for (int k = 0; k < 3; ++k)
    q.block(k * n, k * n, n, n) = centering;
  return q;
}

Conformation apply_transform(const Conformation &c, const RigidTransform &t) {
  Conformation out = c * t.rotation.transpose();
  out.rowwise() += t.translation.transpose();
  return out;
}

Alignment kabsch_align(const Conformation &mobile, const Conformation &target) {
  if (mobile.rows() != target.rows())
    throw InvalidInput("kabsch_align: atom counts differ (" +
                       std::to_string(mobile.rows()) + " vs " +
                       std::to_string(target.rows()) + ")");
  if (mobile.rows() == 0)
    throw InvalidInput("kabsch_align: empty conformation");

  const Eigen::Vector3d com_m = center_of_mass(mobile);
  const Eigen::Vector3d com_t = center_of_mass(target);
  const Conformation p = mobile.rowwise() - com_m.transpose();
  const Conformation q = target.rowwise() - com_t.transpose();

  Alignment out;
  const double scale = std::max(p.cwiseAbs().maxCoeff(), q.cwiseAbs().maxCoeff());
  const bool collapsed = p.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, scale) ||
                         q.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, scale);
  if (!collapsed) {
    const Eigen::Matrix3d h = p.transpose() * q;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    // Singular values come sorted descending; column 2 is the smallest.
    if ((v * u.transpose()).determinant() < 0.0)
      v.col(2) = -v.col(2);
    out.transform.rotation = v * u.transpose();
  }
  out.transform.translation = com_t - out.transform.rotation * com_m;
  out.aligned = apply_transform(mobile, out.transform);
  return out;
}

double rmsd(const Conformation &a, const Conformation &b) {
  if (a.rows() != b.rows())
    throw InvalidInput("rmsd: atom counts differ (" + std::to_string(a.rows()) +
                       " vs " + std::to_string(b.rows()) + ")");
  const Alignment al = kabsch_align(a, b);
  return std::sqrt((al.aligned - b).squaredNorm() / static_cast<double>(a.rows()));
}

Eigen::Matrix3d random_rotation(Rng &rng) {
  std::normal_distribution<double> normal;
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-8);
  return q.normalized().toRotationMatrix();
}

Conformation standard_normal(int n, Rng &rng) {
  std::normal_distribution<double> normal;
  Conformation out(n, 3);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k)
      out(i, k) = normal(rng);
  return out;
}

}  // namespace confdiff
