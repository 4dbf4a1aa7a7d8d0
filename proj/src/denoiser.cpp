//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/denoiser.hpp"

#include <cmath>
#include <initializer_list>
#include <string>
#include <utility>

#include "confdiff/errors.hpp"

namespace confdiff {

using diff::Tape;
using diff::Tensor;
using diff::Var;

void DenoiserConfig::validate() const {
  if (num_elements <= 0 || hidden_dim <= 0 || encoder_layers <= 0 || gfn_layers <= 0 ||
      time_dim <= 0 || rbf_bins <= 1 || !(radius > 0.0))
    throw InvalidInput("denoiser configuration values must all be positive");
  if (time_dim % 2 != 0)
    throw InvalidInput("time_dim must be even");
}

namespace {

void add_dense(diff::ParameterStore &params, const std::string &name, int fan_in, int fan_out,
               double gain, Rng &rng) {
  const double limit = gain * std::sqrt(3.0 / fan_in);
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor w(fan_in, fan_out);
  for (Eigen::Index k = 0; k < w.size(); ++k)
    w.data()[k] = u(rng);
  params.add(name + ".w", std::move(w));
  params.add(name + ".b", Tensor::Zero(1, fan_out));
}

// One affine map whose input is the concatenation of several blocks; each
// block gets its own weight so it can be projected before being gathered.
void add_split_dense(diff::ParameterStore &params, const std::string &name,
                     std::initializer_list<std::pair<const char *, int>> blocks, int fan_out,
                     Rng &rng) {
  int fan_in = 0;
  for (const auto &[block, width] : blocks)
    fan_in += width;
  const double limit = std::sqrt(3.0 / fan_in);
  std::uniform_real_distribution<double> u(-limit, limit);
  for (const auto &[block, width] : blocks) {
    Tensor w(width, fan_out);
    for (Eigen::Index k = 0; k < w.size(); ++k)
      w.data()[k] = u(rng);
    params.add(name + "." + block, std::move(w));
  }
  params.add(name + ".b", Tensor::Zero(1, fan_out));
}

/// Two affine maps with SiLU in between.
void add_ffn(diff::ParameterStore &params, const std::string &name, int in, int hidden,
             int out, double out_gain, Rng &rng) {
  add_dense(params, name + ".0", in, hidden, 1.0, rng);
  add_dense(params, name + ".1", hidden, out, out_gain, rng);
}

void add_embedding(diff::ParameterStore &params, const std::string &name, int rows, int cols,
                   Rng &rng) {
  std::normal_distribution<double> normal;
  Tensor e(rows, cols);
  for (Eigen::Index k = 0; k < e.size(); ++k)
    e.data()[k] = normal(rng);
  params.add(name, std::move(e));
}

Var ffn(Tape &tape, const diff::ParameterStore &params, const std::string &name, Var x) {
  Var hidden = diff::silu(diff::linear(x, tape.parameter(params, name + ".0.w"),
                                       tape.parameter(params, name + ".0.b")));
  return diff::linear(hidden, tape.parameter(params, name + ".1.w"),
                      tape.parameter(params, name + ".1.b"));
}

// Second half of an FFN whose first layer was assembled by the caller.
Var ffn_tail(Tape &tape, const diff::ParameterStore &params, const std::string &name, Var pre) {
  Var hidden = diff::silu(diff::add_row(pre, tape.parameter(params, name + ".0.b")));
  return diff::linear(hidden, tape.parameter(params, name + ".1.w"),
                      tape.parameter(params, name + ".1.b"));
}

Var project(Tape &tape, const diff::ParameterStore &params, const std::string &name, Var x) {
  return diff::matmul(x, tape.parameter(params, name));
}

Tensor sinusoidal_embedding(const std::vector<int> &steps, int dim) {
  const int half = dim / 2;
  Tensor out(static_cast<Eigen::Index>(steps.size()), dim);
  for (std::size_t m = 0; m < steps.size(); ++m)
    for (int k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(10000.0) * k / half);
      out(static_cast<Eigen::Index>(m), k) = std::sin(steps[m] * freq);
      out(static_cast<Eigen::Index>(m), half + k) = std::cos(steps[m] * freq);
    }
  return out;
}

Tensor radial_basis(const Eigen::VectorXd &d, int bins, double radius) {
  const double spacing = radius / (bins - 1);
  const double coeff = -0.5 / (spacing * spacing);
  Tensor out(d.size(), bins);
  for (Eigen::Index e = 0; e < d.size(); ++e)
    for (int k = 0; k < bins; ++k) {
      const double diff = d(e) - k * spacing;
      out(e, k) = std::exp(coeff * diff * diff);
    }
  return out;
}

}  // namespace

void init_denoiser_parameters(const DenoiserConfig &config, diff::ParameterStore &params,
                              std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const int b = config.hidden_dim;
  add_embedding(params, "embed.atom", config.num_elements, b, rng);
  add_ffn(params, "embed.time", config.time_dim, b, b, 1.0, rng);
  add_embedding(params, "encoder.edge_embedding", kNumBondTypes, b, rng);
  for (int k = 0; k < config.encoder_layers; ++k) {
    const std::string p = "encoder." + std::to_string(k);
    add_split_dense(params, p + ".filter.0", {{"rbf", config.rbf_bins}, {"edge", b}}, b, rng);
    add_dense(params, p + ".filter.1", b, b, 1.0, rng);
    add_ffn(params, p + ".update", b, b, b, 0.5, rng);
  }
  add_embedding(params, "gfn.edge_embedding", kNumBondTypes, b, rng);
  for (int l = 0; l < config.gfn_layers; ++l) {
    const std::string p = "gfn." + std::to_string(l);
    add_split_dense(params, p + ".message.0",
                    {{"receiver", b}, {"sender", b}, {"distance", 1}, {"edge", b}}, b, rng);
    add_dense(params, p + ".message.1", b, b, 1.0, rng);
    add_ffn(params, p + ".node", 2 * b, b, b, 1.0, rng);
    add_ffn(params, p + ".field", b, b, 1, 0.1, rng);
  }
}

BatchGraph make_batch_graph(std::span<const DenoiserInput> batch, const DenoiserConfig &config) {
  BatchGraph out;
  out.atom_offset.push_back(0);
  for (const DenoiserInput &item : batch) {
    if (item.graph == nullptr)
      throw InvalidInput("denoiser input without a graph");
    validate_conformation(item.coords);
    if (item.t < 1)
      throw InvalidInput("diffusion step must be >= 1, got " + std::to_string(item.t));
    const MolecularGraph &g = *item.graph;
    for (const Atom &a : g.atoms())
      if (a.element < 0 || a.element >= config.num_elements)
        throw InvalidInput("unknown element code " + std::to_string(a.element) +
                           " (model knows " + std::to_string(config.num_elements) + ")");
    out.atom_offset.push_back(out.atom_offset.back() + g.atom_count());
  }
  const int molecules = static_cast<int>(batch.size());
  out.atom_count = out.atom_offset.back();
  out.coords.resize(out.atom_count, 3);
  out.centered.resize(out.atom_count, 3);

  std::vector<double> lengths;
  for (int m = 0; m < molecules; ++m) {
    const DenoiserInput &item = batch[m];
    const int offset = out.atom_offset[m];
    const int n = item.graph->atom_count();
    out.coords.middleRows(offset, n) = item.coords;
    out.centered.middleRows(offset, n) = project_com_free(item.coords);
    out.steps.push_back(item.t);
    for (const Atom &a : item.graph->atoms()) {
      out.elements.push_back(a.element);
      out.molecule_of_atom.push_back(m);
    }
    const NeighborList nl = build_neighbor_list(*item.graph, item.coords, config.radius);
    for (std::size_t e = 0; e < nl.edges.size(); ++e) {
      const Edge &ed = nl.edges[e];
      const double d = nl.lengths(static_cast<Eigen::Index>(e));
      out.receiver.push_back(offset + ed.i);
      out.sender.push_back(offset + ed.j);
      out.edge_type.push_back(static_cast<int>(ed.type));
      lengths.push_back(d);
      out.receiver.push_back(offset + ed.j);
      out.sender.push_back(offset + ed.i);
      out.edge_type.push_back(static_cast<int>(ed.type));
      lengths.push_back(d);
    }
  }
  out.lengths = Eigen::Map<const Eigen::VectorXd>(lengths.data(),
                                                  static_cast<Eigen::Index>(lengths.size()));
  return out;
}

Var embed_inputs(Tape &tape, const diff::ParameterStore &params, const DenoiserConfig &config,
                 const BatchGraph &batch) {
  Var atom = diff::gather_rows(tape.parameter(params, "embed.atom"), batch.elements);
  Var time = ffn(tape, params, "embed.time",
                 tape.constant(sinusoidal_embedding(batch.steps, config.time_dim)));
  return diff::add(atom, diff::gather_rows(time, batch.molecule_of_atom));
}

Var encode_invariant(Tape &tape, const diff::ParameterStore &params,
                     const DenoiserConfig &config, const BatchGraph &batch, Var h) {
  Var rbf = tape.constant(radial_basis(batch.lengths, config.rbf_bins, config.radius));
  Var edge_table = tape.parameter(params, "encoder.edge_embedding");
  for (int k = 0; k < config.encoder_layers; ++k) {
    const std::string p = "encoder." + std::to_string(k);
    Var pre = diff::add(project(tape, params, p + ".filter.0.rbf", rbf),
                        diff::gather_rows(project(tape, params, p + ".filter.0.edge", edge_table),
                                          batch.edge_type));
    Var filter = ffn_tail(tape, params, p + ".filter", pre);
    Var msg = diff::mul(diff::gather_rows(h, batch.sender), filter);
    Var agg = diff::scatter_add_rows(msg, batch.receiver, batch.atom_count);
    h = diff::add(h, ffn(tape, params, p + ".update", agg));
  }
  return h;
}

GfnOutput gfn_forward(Tape &tape, const diff::ParameterStore &params,
                      const DenoiserConfig &config, const BatchGraph &batch, Var h) {
  GfnOutput out;
  const Eigen::Index edges = static_cast<Eigen::Index>(batch.receiver.size());

  // Unit radial directions from the input coordinates.
  Tensor directions = Tensor::Zero(edges, 3);
  for (Eigen::Index e = 0; e < edges; ++e) {
    const double d = batch.lengths(e);
    if (d < kMinEdgeLength) {
      ++out.degenerate_edges;
      continue;
    }
    const auto ci = batch.coords.row(batch.receiver[e]);
    const auto cj = batch.coords.row(batch.sender[e]);
    if (config.fault == FaultInjection::kRadialSign)
      directions.row(e) = (ci + cj) / d;
    else
      directions.row(e) = (ci - cj) / d;
  }
  Var dir = tape.constant(std::move(directions));
  Var edge_table = tape.parameter(params, "gfn.edge_embedding");

  Var x = tape.constant(batch.coords);
  for (int l = 0; l < config.gfn_layers; ++l) {
    const std::string p = "gfn." + std::to_string(l);
    Var sq = diff::row_sqnorm(
        diff::sub(diff::gather_rows(x, batch.receiver), diff::gather_rows(x, batch.sender)));
    Var pre = diff::add(
        diff::add(diff::gather_rows(project(tape, params, p + ".message.0.receiver", h), batch.receiver),
                  diff::gather_rows(project(tape, params, p + ".message.0.sender", h), batch.sender)),
        diff::add(project(tape, params, p + ".message.0.distance", sq),
                  diff::gather_rows(project(tape, params, p + ".message.0.edge", edge_table),
                                    batch.edge_type)));
    Var m = ffn_tail(tape, params, p + ".message", pre);
    Var agg = diff::scatter_add_rows(m, batch.receiver, batch.atom_count);
    const Var node_parts[] = {h, agg};
    h = ffn(tape, params, p + ".node", diff::concat_cols(node_parts));
    Var weight = ffn(tape, params, p + ".field", m);
    x = diff::scatter_add_rows(diff::mul_col(dir, weight), batch.receiver, batch.atom_count);
    out.h_layers.push_back(h);
    out.x_layers.push_back(x);
  }
  out.x = x;
  return out;
}

Var eps_theta(Tape &tape, const diff::ParameterStore &params, const DenoiserConfig &config,
              const BatchGraph &batch, DenoiserTrace *trace) {
  Var h0 = embed_inputs(tape, params, config, batch);
  Var h = encode_invariant(tape, params, config, batch, h0);
  GfnOutput gfn = gfn_forward(tape, params, config, batch, h);
  Var eps = gfn.x;
  if (config.output_mode == OutputMode::kResidual)
    eps = diff::sub(eps, tape.constant(batch.centered));
  if (trace != nullptr)
    *trace = DenoiserTrace{h0, h, std::move(gfn)};
  return eps;
}

std::vector<Conformation> split_by_molecule(const Eigen::MatrixXd &stacked,
                                            const BatchGraph &batch) {
  std::vector<Conformation> out;
  for (std::size_t m = 0; m + 1 < batch.atom_offset.size(); ++m) {
    const int begin = batch.atom_offset[m];
    const int n = batch.atom_offset[m + 1] - begin;
    out.emplace_back(stacked.middleRows(begin, n));
  }
  return out;
}

DenoiserModel DenoiserModel::initialized(const DenoiserConfig &config, std::uint64_t seed) {
  DenoiserModel model;
  model.config = config;
  init_denoiser_parameters(config, model.params, seed);
  return model;
}

std::vector<Conformation> DenoiserModel::predict(const MolecularGraph &g,
                                                 std::span<const Conformation> coords,
                                                 int t) const {
  std::vector<DenoiserInput> inputs;
  inputs.reserve(coords.size());
  for (const Conformation &c : coords)
    inputs.push_back({&g, c, t});
  const BatchGraph batch = make_batch_graph(inputs, config);
  Tape tape(false);
  Var eps = eps_theta(tape, params, config, batch);
  return split_by_molecule(eps.value(), batch);
}

Conformation DenoiserModel::predict(const MolecularGraph &g, const Conformation &coords,
                                    int t) const {
  return predict(g, std::span<const Conformation>(&coords, 1), t).front();
}

}  // namespace confdiff
