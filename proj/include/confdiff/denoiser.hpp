//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "confdiff/diffcore.hpp"
#include "confdiff/geom.hpp"
#include "confdiff/molgraph.hpp"

namespace confdiff {

/// kResidual predicts x^L minus the centered input coordinates; kAbsolute
/// predicts x^L itself.
enum class OutputMode { kAbsolute, kResidual };

/// Deliberate defects used to demonstrate that the verification suite detects
/// broken equivariance. Never enabled in normal runs.
enum class FaultInjection { kNone, kRadialSign };

struct DenoiserConfig {
  int num_elements = 16;
  int hidden_dim = 128;
  int encoder_layers = 4;
  int gfn_layers = 4;
  int time_dim = 32;
  int rbf_bins = 64;
  double radius = 10.0;
  OutputMode output_mode = OutputMode::kResidual;
  FaultInjection fault = FaultInjection::kNone;

  void validate() const;
};

/// Fills `params` with freshly initialized weights for every network piece.
void init_denoiser_parameters(const DenoiserConfig &config, diff::ParameterStore &params,
                              std::uint64_t seed);

struct DenoiserInput {
  const MolecularGraph *graph = nullptr;
  Conformation coords;
  int t = 1;
};

/// Disjoint union of a batch. Every undirected neighbor pair (i, j) becomes the
/// two directed edges i <- j and j <- i; `receiver` aggregates from `sender`.
struct BatchGraph {
  int atom_count = 0;
  std::vector<int> elements;
  std::vector<int> molecule_of_atom;
  std::vector<int> atom_offset;  // size = molecules + 1
  std::vector<int> steps;        // per molecule
  std::vector<int> receiver;
  std::vector<int> sender;
  std::vector<int> edge_type;
  Eigen::MatrixXd coords;   // stacked input coordinates
  Eigen::MatrixXd centered; // coords with each molecule's center of mass removed
  Eigen::VectorXd lengths;  // ||c_receiver - c_sender||
};

BatchGraph make_batch_graph(std::span<const DenoiserInput> batch, const DenoiserConfig &config);

/// Atom-type embedding plus the projected sinusoidal embedding of t.
diff::Var embed_inputs(diff::Tape &tape, const diff::ParameterStore &params,
                       const DenoiserConfig &config, const BatchGraph &batch);

/// Continuous-filter message passing over radial-basis distance features and
/// edge types. Sees coordinates only through pairwise distances.
diff::Var encode_invariant(diff::Tape &tape, const diff::ParameterStore &params,
                           const DenoiserConfig &config, const BatchGraph &batch, diff::Var h);

struct GfnOutput {
  diff::Var x;
  std::vector<diff::Var> h_layers;  // h after each layer
  std::vector<diff::Var> x_layers;  // x after each layer
  int degenerate_edges = 0;
};

/// Graph field network layers: messages from (h_i, h_j, |x_i - x_j|^2, e_ij),
/// node update from the summed messages, and x_i as the sum of unit radial
/// directions (c_i - c_j) / d_ij weighted by a scalar per message.
GfnOutput gfn_forward(diff::Tape &tape, const diff::ParameterStore &params,
                      const DenoiserConfig &config, const BatchGraph &batch, diff::Var h);

struct DenoiserTrace {
  diff::Var h0;
  diff::Var h_encoded;
  GfnOutput gfn;
};

/// Stacked (sum of atom counts) x 3 noise field for the whole batch.
diff::Var eps_theta(diff::Tape &tape, const diff::ParameterStore &params,
                    const DenoiserConfig &config, const BatchGraph &batch,
                    DenoiserTrace *trace = nullptr);

struct DenoiserModel {
  DenoiserConfig config;
  diff::ParameterStore params;

  static DenoiserModel initialized(const DenoiserConfig &config, std::uint64_t seed);

  /// Evaluates the network for several conformations of one graph at step t.
  std::vector<Conformation> predict(const MolecularGraph &g,
                                    std::span<const Conformation> coords, int t) const;
  Conformation predict(const MolecularGraph &g, const Conformation &coords, int t) const;
};

/// Splits a stacked field into per-molecule blocks.
std::vector<Conformation> split_by_molecule(const Eigen::MatrixXd &stacked,
                                            const BatchGraph &batch);

}  // namespace confdiff
