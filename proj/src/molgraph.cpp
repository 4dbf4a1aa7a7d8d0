//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/molgraph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>

#include "confdiff/errors.hpp"

namespace confdiff {

BondType bond_type_from_code(int code) {
  if (code < 0 || code >= kNumBondTypes)
    throw InvalidInput("unknown bond type code " + std::to_string(code));
  return static_cast<BondType>(code);
}

std::string_view bond_type_name(BondType type) {
  switch (type) {
  case BondType::kSingle:
    return "single";
  case BondType::kDouble:
    return "double";
  case BondType::kTriple:
    return "triple";
  case BondType::kAromatic:
    return "aromatic";
  case BondType::kVirtual:
    return "virtual";
  }
  return "unknown";
}

MolecularGraph::MolecularGraph(std::vector<Atom> atoms, std::vector<Bond> bonds)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {
  const int n = atom_count();
  std::set<std::pair<int, int>> seen;
  for (const Bond &b : bonds_) {
    if (b.i < 0 || b.j < 0 || b.i >= n || b.j >= n)
      throw InvalidInput("bond (" + std::to_string(b.i) + ", " + std::to_string(b.j) +
                         ") out of range for " + std::to_string(n) + " atoms");
    if (b.i == b.j)
      throw InvalidInput("self bond on atom " + std::to_string(b.i));
    bond_type_from_code(static_cast<int>(b.type));
    if (!seen.emplace(std::min(b.i, b.j), std::max(b.i, b.j)).second)
      throw InvalidInput("duplicate bond (" + std::to_string(b.i) + ", " +
                         std::to_string(b.j) + ")");
  }
}

std::optional<BondType> MolecularGraph::bond_between(int i, int j) const {
  for (const Bond &b : bonds_)
    if ((b.i == i && b.j == j) || (b.i == j && b.j == i))
      return b.type;
  return std::nullopt;
}

bool operator==(const MolecularGraph &a, const MolecularGraph &b) {
  if (a.atoms_.size() != b.atoms_.size() || a.bonds_.size() != b.bonds_.size())
    return false;
  for (std::size_t k = 0; k < a.atoms_.size(); ++k)
    if (a.atoms_[k].element != b.atoms_[k].element)
      return false;
  for (std::size_t k = 0; k < a.bonds_.size(); ++k) {
    const Bond &x = a.bonds_[k];
    const Bond &y = b.bonds_[k];
    if (x.i != y.i || x.j != y.j || x.type != y.type)
      return false;
  }
  return true;
}

namespace {

using CellKey = std::array<long long, 3>;

CellKey cell_of(const Eigen::RowVector3d &p, double size) {
  return {static_cast<long long>(std::floor(p(0) / size)),
          static_cast<long long>(std::floor(p(1) / size)),
          static_cast<long long>(std::floor(p(2) / size))};
}

}  // namespace

NeighborList build_neighbor_list(const MolecularGraph &g, const Conformation &c,
                                 double tau) {
  if (c.rows() != g.atom_count())
    throw InvalidInput("build_neighbor_list: conformation has " +
                       std::to_string(c.rows()) + " atoms, graph has " +
                       std::to_string(g.atom_count()));
  if (!(tau > 0.0))
    throw InvalidInput("build_neighbor_list: radius must be positive");

  const int n = g.atom_count();
  std::map<std::pair<int, int>, BondType> pairs;
  for (const Bond &b : g.bonds())
    pairs.emplace(std::make_pair(std::min(b.i, b.j), std::max(b.i, b.j)), b.type);

  // Uniform grid with cell edge tau: candidates live in the 27 surrounding cells.
  std::map<CellKey, std::vector<int>> cells;
  for (int i = 0; i < n; ++i)
    cells[cell_of(c.row(i), tau)].push_back(i);

  const double tau_sq = tau * tau;
  for (int i = 0; i < n; ++i) {
    const CellKey home = cell_of(c.row(i), tau);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dz = -1; dz <= 1; ++dz) {
          auto it = cells.find({home[0] + dx, home[1] + dy, home[2] + dz});
          if (it == cells.end())
            continue;
          for (int j : it->second) {
            if (j <= i)
              continue;
            if ((c.row(i) - c.row(j)).squaredNorm() <= tau_sq)
              pairs.emplace(std::make_pair(i, j), BondType::kVirtual);
          }
        }
  }

  NeighborList out;
  out.adjacency.assign(n, {});
  out.edges.reserve(pairs.size());
  out.lengths.resize(static_cast<Eigen::Index>(pairs.size()));
  for (const auto &[key, type] : pairs) {
    out.lengths(static_cast<Eigen::Index>(out.edges.size())) =
        (c.row(key.first) - c.row(key.second)).norm();
    out.edges.push_back({key.first, key.second, type});
    out.adjacency[key.first].push_back(key.second);
    out.adjacency[key.second].push_back(key.first);
  }
  for (auto &nbrs : out.adjacency)
    std::sort(nbrs.begin(), nbrs.end());
  return out;
}

DistanceFeatures distances(std::span<const Edge> edges, const Conformation &c) {
  DistanceFeatures out;
  out.edges.assign(edges.begin(), edges.end());
  out.d.resize(static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge &ed = edges[e];
    if (ed.i < 0 || ed.j < 0 || ed.i >= c.rows() || ed.j >= c.rows())
      throw InvalidInput("distances: edge index out of range");
    out.d(static_cast<Eigen::Index>(e)) = (c.row(ed.i) - c.row(ed.j)).norm();
  }
  return out;
}

DistanceJacobianProduct distance_jacobian_apply(std::span<const Edge> edges,
                                                const Conformation &c,
                                                const Eigen::VectorXd &s) {
  if (s.size() != static_cast<Eigen::Index>(edges.size()))
    throw InvalidInput("distance_jacobian_apply: " + std::to_string(s.size()) +
                       " edge weights for " + std::to_string(edges.size()) + " edges");
  DistanceJacobianProduct out;
  out.field = Conformation::Zero(c.rows(), 3);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge &ed = edges[e];
    if (ed.i < 0 || ed.j < 0 || ed.i >= c.rows() || ed.j >= c.rows())
      throw InvalidInput("distance_jacobian_apply: edge index out of range");
    const Eigen::RowVector3d diff = c.row(ed.i) - c.row(ed.j);
    const double d = diff.norm();
    if (d < kMinEdgeLength) {
      ++out.degenerate_edges;
      continue;
    }
    const Eigen::RowVector3d contrib = s(static_cast<Eigen::Index>(e)) / d * diff;
    out.field.row(ed.i) += contrib;
    out.field.row(ed.j) -= contrib;
  }
  return out;
}

}  // namespace confdiff
