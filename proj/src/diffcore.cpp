//
// confdiff - Copyright 2026 The confdiff Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "confdiff/diffcore.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "confdiff/errors.hpp"

namespace confdiff::diff {

namespace {

std::string shape_of(const Tensor &t) {
  return "(" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ")";
}

[[noreturn]] void shape_error(std::string_view op, const std::string &detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

Tape &tape_of(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw ShapeError("operands live on different tapes");
  return *a.tape;
}

}  // namespace

const Tensor &Var::value() const { return tape->value(*this); }

// ---------------------------------------------------------------------------
// ParameterStore

void ParameterStore::add(const std::string &name, Tensor value) {
  if (params_.count(name) != 0)
    throw InvalidInput("duplicate parameter name '" + name + "'");
  Parameter p;
  p.first_moment = Tensor::Zero(value.rows(), value.cols());
  p.second_moment = Tensor::Zero(value.rows(), value.cols());
  p.value = std::move(value);
  params_.emplace(name, std::move(p));
}

bool ParameterStore::contains(const std::string &name) const {
  return params_.count(name) != 0;
}

const Parameter &ParameterStore::at(const std::string &name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw InvalidInput("unknown parameter '" + name + "'");
  return it->second;
}

Parameter &ParameterStore::at(const std::string &name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw InvalidInput("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor &ParameterStore::value(const std::string &name) const { return at(name).value; }
Tensor &ParameterStore::value(const std::string &name) { return at(name).value; }

std::size_t ParameterStore::scalar_count() const {
  std::size_t total = 0;
  for (const auto &[name, p] : params_)
    total += static_cast<std::size_t>(p.value.size());
  return total;
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), Tensor(), false, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::variable(Tensor value) {
  nodes_.push_back({std::move(value), Tensor(), grad_enabled_, nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(const ParameterStore &store, const std::string &name) {
  auto it = parameter_nodes_.find(name);
  if (it != parameter_nodes_.end())
    return {this, it->second};
  Var v = variable(store.value(name));
  parameter_nodes_.emplace(name, v.id);
  return v;
}

Tensor Tape::grad(Var v) const {
  const Node &node = nodes_[v.id];
  if (node.grad.size() == 0)
    return Tensor::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> parents, Backward backward) {
  bool any = false;
  for (const Var &p : parents)
    any = any || nodes_[p.id].requires_grad;
  nodes_.push_back({std::move(value), Tensor(), any, any ? std::move(backward) : nullptr});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Tensor &g) {
  Node &node = nodes_[id];
  if (!node.requires_grad)
    return;
  if (node.grad.size() == 0)
    node.grad = g;
  else
    node.grad += g;
}

void Tape::backward(Var root) {
  const Tensor &rv = nodes_[root.id].value;
  if (rv.rows() != 1 || rv.cols() != 1)
    shape_error("backward", "loss root must be 1x1, got " + shape_of(rv));
  for (Node &n : nodes_)
    n.grad.resize(0, 0);
  if (!nodes_[root.id].requires_grad)
    return;
  nodes_[root.id].grad = Tensor::Ones(1, 1);
  for (int id = root.id; id >= 0; --id) {
    Node &node = nodes_[id];
    if (!node.backward || node.grad.size() == 0)
      continue;
    // Copy: the callback may append to other nodes' gradients only, but keep
    // the out-gradient stable regardless.
    const Tensor out_grad = node.grad;
    node.backward(*this, out_grad);
  }
}

Gradients Tape::parameter_gradients() const {
  Gradients out;
  for (const auto &[name, id] : parameter_nodes_)
    out.emplace(name, grad(Var{const_cast<Tape *>(this), id}));
  return out;
}

// ---------------------------------------------------------------------------
// Ops

Var matmul(Var a, Var b) {
  Tape &tape = tape_of(a, b);
  const Tensor &av = a.value();
  const Tensor &bv = b.value();
  if (av.cols() != bv.rows())
    shape_error("matmul", shape_of(av) + " * " + shape_of(bv));
  return tape.record(av * bv, {a, b}, [a, b](Tape &t, const Tensor &g) {
    if (t.needs_grad(a.id))
      t.accumulate(a.id, g * t.value(b).transpose());
    if (t.needs_grad(b.id))
      t.accumulate(b.id, t.value(a).transpose() * g);
  });
}

Var add(Var a, Var b) {
  Tape &tape = tape_of(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_error("add", shape_of(a.value()) + " + " + shape_of(b.value()));
  return tape.record(a.value() + b.value(), {a, b}, [a, b](Tape &t, const Tensor &g) {
    t.accumulate(a.id, g);
    t.accumulate(b.id, g);
  });
}

Var sub(Var a, Var b) {
  Tape &tape = tape_of(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_error("sub", shape_of(a.value()) + " - " + shape_of(b.value()));
  return tape.record(a.value() - b.value(), {a, b}, [a, b](Tape &t, const Tensor &g) {
    t.accumulate(a.id, g);
    if (t.needs_grad(b.id))
      t.accumulate(b.id, -g);
  });
}

Var mul(Var a, Var b) {
  Tape &tape = tape_of(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    shape_error("mul", shape_of(a.value()) + " .* " + shape_of(b.value()));
  return tape.record(a.value().cwiseProduct(b.value()), {a, b},
                     [a, b](Tape &t, const Tensor &g) {
                       if (t.needs_grad(a.id))
                         t.accumulate(a.id, g.cwiseProduct(t.value(b)));
                       if (t.needs_grad(b.id))
                         t.accumulate(b.id, g.cwiseProduct(t.value(a)));
                     });
}

Var scale(Var a, double factor) {
  return a.tape->record(a.value() * factor, {a}, [a, factor](Tape &t, const Tensor &g) {
    t.accumulate(a.id, g * factor);
  });
}

Var add_row(Var a, Var row) {
  Tape &tape = tape_of(a, row);
  if (row.rows() != 1 || row.cols() != a.cols())
    shape_error("add_row", shape_of(a.value()) + " + row " + shape_of(row.value()));
  Tensor out = a.value();
  out.rowwise() += row.value().row(0);
  return tape.record(std::move(out), {a, row}, [a, row](Tape &t, const Tensor &g) {
    t.accumulate(a.id, g);
    if (t.needs_grad(row.id))
      t.accumulate(row.id, g.colwise().sum());
  });
}

Var mul_col(Var a, Var col) {
  Tape &tape = tape_of(a, col);
  if (col.cols() != 1 || col.rows() != a.rows())
    shape_error("mul_col", shape_of(a.value()) + " .* col " + shape_of(col.value()));
  Tensor out = a.value().array().colwise() * col.value().col(0).array();
  return tape.record(std::move(out), {a, col}, [a, col](Tape &t, const Tensor &g) {
    if (t.needs_grad(a.id))
      t.accumulate(a.id, (g.array().colwise() * t.value(col).col(0).array()).matrix());
    if (t.needs_grad(col.id))
      t.accumulate(col.id, g.cwiseProduct(t.value(a)).rowwise().sum());
  });
}

Var silu(Var a) {
  const Tensor sig = (1.0 + (-a.value().array()).exp()).inverse().matrix();
  Tensor out = a.value().cwiseProduct(sig);
  return a.tape->record(std::move(out), {a}, [a, sig](Tape &t, const Tensor &g) {
    const auto x = t.value(a).array();
    const auto s = sig.array();
    t.accumulate(a.id, (g.array() * (s * (1.0 + x * (1.0 - s)))).matrix());
  });
}

Var gather_rows(Var a, std::span<const int> index) {
  const Tensor &av = a.value();
  Tensor out(static_cast<Eigen::Index>(index.size()), av.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= av.rows())
      shape_error("gather_rows", "index " + std::to_string(index[k]) + " outside " +
                                     shape_of(av));
    out.row(static_cast<Eigen::Index>(k)) = av.row(index[k]);
  }
  std::vector<int> idx(index.begin(), index.end());
  const Eigen::Index rows = av.rows();
  return a.tape->record(std::move(out), {a},
                        [a, idx = std::move(idx), rows](Tape &t, const Tensor &g) {
                          Tensor back = Tensor::Zero(rows, g.cols());
                          for (std::size_t k = 0; k < idx.size(); ++k)
                            back.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
                          t.accumulate(a.id, back);
                        });
}

Var scatter_add_rows(Var a, std::span<const int> index, Eigen::Index out_rows) {
  const Tensor &av = a.value();
  if (static_cast<Eigen::Index>(index.size()) != av.rows())
    shape_error("scatter_add_rows", std::to_string(index.size()) + " indices for " +
                                        shape_of(av));
  Tensor out = Tensor::Zero(out_rows, av.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= out_rows)
      shape_error("scatter_add_rows", "index " + std::to_string(index[k]) +
                                          " outside " + std::to_string(out_rows) + " rows");
    out.row(index[k]) += av.row(static_cast<Eigen::Index>(k));
  }
  std::vector<int> idx(index.begin(), index.end());
  return a.tape->record(std::move(out), {a},
                        [a, idx = std::move(idx)](Tape &t, const Tensor &g) {
                          Tensor back(static_cast<Eigen::Index>(idx.size()), g.cols());
                          for (std::size_t k = 0; k < idx.size(); ++k)
                            back.row(static_cast<Eigen::Index>(k)) = g.row(idx[k]);
                          t.accumulate(a.id, back);
                        });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty())
    shape_error("concat_cols", "no operands");
  Tape &tape = *parts.front().tape;
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var &p : parts) {
    if (p.tape != &tape)
      throw ShapeError("concat_cols: operands live on different tapes");
    if (p.rows() != rows)
      shape_error("concat_cols", "row mismatch " + shape_of(parts.front().value()) +
                                     " vs " + shape_of(p.value()));
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const Var &p : parts) {
    offsets.push_back(at);
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return tape.record(std::move(out), parts,
                     [ps, offsets](Tape &t, const Tensor &g) {
                       for (std::size_t k = 0; k < ps.size(); ++k)
                         if (t.needs_grad(ps[k].id))
                           t.accumulate(ps[k].id, g.middleCols(offsets[k], ps[k].cols()));
                     });
}

Var row_sqnorm(Var a) {
  Tensor out = a.value().rowwise().squaredNorm();
  return a.tape->record(std::move(out), {a}, [a](Tape &t, const Tensor &g) {
    t.accumulate(a.id, 2.0 * (t.value(a).array().colwise() * g.col(0).array()).matrix());
  });
}

Var sum(Var a) {
  Tensor out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape->record(std::move(out), {a}, [a](Tape &t, const Tensor &g) {
    t.accumulate(a.id, Tensor::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
  });
}

// ---------------------------------------------------------------------------
// Optimizer

void adam_step(ParameterStore &params, const Gradients &gradients,
               const AdamOptions &options) {
  for (const auto &[name, g] : gradients) {
    if (!params.contains(name))
      throw TrainingError("gradient for unknown parameter '" + name + "'");
    const Tensor &v = params.value(name);
    if (g.rows() != v.rows() || g.cols() != v.cols())
      throw TrainingError("gradient shape mismatch for parameter '" + name + "'");
    if (!g.allFinite())
      throw TrainingError("non-finite gradient for parameter '" + name + "'");
  }

  const std::int64_t step = params.step() + 1;
  params.set_step(step);
  const double c1 = 1.0 - std::pow(options.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(options.beta2, static_cast<double>(step));
  for (const auto &[name, entry] : params.entries()) {
    Parameter &p = params.at(name);
    auto it = gradients.find(name);
    if (it == gradients.end()) {
      p.first_moment *= options.beta1;
      p.second_moment *= options.beta2;
    } else {
      const Tensor &g = it->second;
      p.first_moment = options.beta1 * p.first_moment + (1.0 - options.beta1) * g;
      p.second_moment =
          options.beta2 * p.second_moment + (1.0 - options.beta2) * g.cwiseProduct(g);
    }
    const auto m_hat = p.first_moment.array() / c1;
    const auto v_hat = p.second_moment.array() / c2;
    p.value.array() -= options.lr * m_hat / (v_hat.sqrt() + options.eps);
  }
}

ForwardBackwardResult forward_backward(const std::function<Var(Tape &)> &build) {
  Tape tape;
  Var loss = build(tape);
  if (loss.tape != &tape)
    throw ShapeError("forward_backward: loss built on a different tape");
  tape.backward(loss);
  ForwardBackwardResult out;
  out.loss = loss.value()(0, 0);
  out.gradients = tape.parameter_gradients();
  return out;
}

}  // namespace confdiff::diff
