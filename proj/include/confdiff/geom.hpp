//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace confdiff {

/// n x 3 coordinate matrix; row i holds the position of atom i.
using Conformation = Eigen::Matrix<double, Eigen::Dynamic, 3>;

using Rng = std::mt19937_64;

/// Proper rigid motion x -> R x + g.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }

  /// The transform equivalent to applying *this first and then `next`.
  RigidTransform then(const RigidTransform &next) const;
  RigidTransform inverse() const;
};

/// Throws InvalidInput unless c has at least one row and only finite entries.
void validate_conformation(const Conformation &c);

Eigen::Vector3d center_of_mass(const Conformation &c);

/// Subtracts the (uniformly weighted) center of mass from every row.
Conformation project_com_free(const Conformation &c);

/// Dense 3n x 3n projector I3 (x) (I_n - 11^T / n) acting on the column-major
/// flattening of an n x 3 conformation. Intended for verification only.
Eigen::MatrixXd com_free_projector(int n);

Conformation apply_transform(const Conformation &c, const RigidTransform &t);

struct Alignment {
  RigidTransform transform;
  Conformation aligned;  // transform applied to the mobile conformation
};

/// Optimal proper superposition of `mobile` onto `target` (Kabsch). Reflections
/// are removed by flipping the singular vector of the smallest singular value.
/// If either point set collapses to a single location the rotation is the
/// identity and only the centers of mass are matched.
Alignment kabsch_align(const Conformation &mobile, const Conformation &target);

/// sqrt(||A' - B||_F^2 / n), with A' the Kabsch superposition of a onto b.
double rmsd(const Conformation &a, const Conformation &b);

/// Uniformly distributed proper rotation (normalized Gaussian quaternion).
Eigen::Matrix3d random_rotation(Rng &rng);

/// n x 3 matrix of independent standard normal draws.
Conformation standard_normal(int n, Rng &rng);

}  // namespace confdiff
