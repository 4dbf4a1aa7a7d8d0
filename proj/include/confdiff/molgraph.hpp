//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "confdiff/geom.hpp"

namespace confdiff {

/// Integer codes are part of the file format and must stay stable.
enum class BondType : int {
  kSingle = 0,
  kDouble = 1,
  kTriple = 2,
  kAromatic = 3,
  kVirtual = 4,
};

inline constexpr int kNumBondTypes = 5;

BondType bond_type_from_code(int code);
std::string_view bond_type_name(BondType type);

struct Atom {
  int element = 0;
};

struct Bond {
  int i = 0;
  int j = 0;
  BondType type = BondType::kSingle;
};

class MolecularGraph {
 public:
  MolecularGraph() = default;

  /// Validates indices, self loops and duplicate undirected bonds.
  MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds);

  int atom_count() const { return static_cast<int>(atoms_.size()); }
  const std::vector<Atom> &atoms() const { return atoms_; }
  const std::vector<Bond> &bonds() const { return bonds_; }

  std::optional<BondType> bond_between(int i, int j) const;

  friend bool operator==(const MolecularGraph &a, const MolecularGraph &b);

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
};

/// Undirected edge with i < j.
struct Edge {
  int i = 0;
  int j = 0;
  BondType type = BondType::kVirtual;

  friend bool operator==(const Edge &, const Edge &) = default;
};

/// Bonded pairs plus every non-bonded pair within the radius; radius-only
/// pairs carry BondType::kVirtual.
struct NeighborList {
  std::vector<std::vector<int>> adjacency;  // ascending per atom
  std::vector<Edge> edges;                  // sorted by (i, j)
  Eigen::VectorXd lengths;                  // one per edge
};

NeighborList build_neighbor_list(const MolecularGraph &g, const Conformation &c,
                                 double tau);

struct DistanceFeatures {
  std::vector<Edge> edges;
  Eigen::VectorXd d;
};

DistanceFeatures distances(std::span<const Edge> edges, const Conformation &c);

/// Edges shorter than this have no usable direction.
inline constexpr double kMinEdgeLength = 1e-8;

struct DistanceJacobianProduct {
  Conformation field;
  int degenerate_edges = 0;
};

/// (d d / d C)^T s: atom i receives s_e (c_i - c_j) / d_e and atom j the
/// negation. Degenerate edges contribute nothing and are counted.
DistanceJacobianProduct distance_jacobian_apply(std::span<const Edge> edges,
                                                const Conformation &c,
                                                const Eigen::VectorXd &s);

}  // namespace confdiff
